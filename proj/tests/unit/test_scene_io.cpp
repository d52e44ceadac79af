#include <filesystem>
#include <functional>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/error.hpp"
#include "ragsr/scene.hpp"

namespace fs = std::filesystem;
using namespace ragsr;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ragsr_scene_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected ragsr::Error";
  return ErrorKind::Config;
}

std::string random_caption(oracle::Gen& g) {
  static const char* pieces[] = {"boat", "sky", "héron", "猫", "🌊", "a", "rusty", "\"quoted\"", "back\\slash", "tab\t"};
  std::string s;
  const int n = g.integer(0, 6);
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += pieces[g.integer(0, 9)];
  }
  return s;
}

Scene random_scene(oracle::Gen& g) {
  Scene s;
  s.source_id = "img_" + std::to_string(g.integer(0, 1 << 20));
  s.image_width = g.integer(1, 4096);
  s.image_height = g.integer(1, 4096);
  s.global_caption = random_caption(g);
  const int active = g.integer(0, 7);
  for (int i = 0; i < active; ++i) {
    double a = g.unit(), b = g.unit(), c = g.unit(), d = g.unit();
    RegionAnnotation r;
    r.box = {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d), g.unit()};
    r.caption = random_caption(g);
    r.token_count = g.integer(1, 20);
    s.regions.push_back(r);
  }
  const int pad = g.integer(0, 3);
  for (int i = 0; i < pad; ++i) s.regions.push_back(RegionAnnotation::padding());
  return s;
}

}  // namespace

TEST(SceneIo, LoadsTwoRegionSceneAndPadsDownstream) {
  const Scene s = load_scene(fs::path(RAGSR_TEST_DATA_DIR) / "two_regions.json");
  EXPECT_EQ(s.source_id, "harbor_0001");
  EXPECT_EQ(s.image_width, 512);
  ASSERT_EQ(s.regions.size(), 3u);
  EXPECT_DOUBLE_EQ(s.regions[1].box.x1, 0.80);

  const Scene prepared = preprocess(s);
  ASSERT_EQ(prepared.regions.size(), 5u);
  EXPECT_EQ(prepared.active_count(), 2u);
  for (std::size_t i = 2; i < 5; ++i) EXPECT_TRUE(prepared.regions[i].is_padding());
}

TEST(SceneIo, InvertedBoxNamesBoxAndCoordinates) {
  const auto path = temp_file("inverted.json");
  write(path, R"({"source_id":"x","image_width":4,"image_height":4,"global_caption":"",
                  "regions":[{"box":[0.7,0.1,0.2,0.9],"confidence":0.9,"caption":"c","token_count":1}]})");
  try {
    load_scene(path);
    FAIL() << "expected invariant error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Invariant);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("regions[0].box"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x0 = 0.69999999999999996"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x1 = 0.20000000000000001"), std::string::npos) << msg;
  }
}

TEST(SceneIo, EmptyRegionsIsValid) {
  const auto path = temp_file("empty.json");
  write(path, R"({"source_id":"e","image_width":8,"image_height":8,"global_caption":"a quiet lake","regions":[]})");
  const Scene s = load_scene(path);
  EXPECT_EQ(s.active_count(), 0u);
  EXPECT_EQ(s.global_caption, "a quiet lake");
}

TEST(SceneIo, ErrorKinds) {
  const auto path = temp_file("bad.json");
  write(path, R"({"source_id":"e","image_width":8,"global_caption":"","regions":[]})");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::MissingField);

  write(path, "{not json");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::Parse);

  write(path, R"({"source_id":"e","image_width":0,"image_height":8,"global_caption":"","regions":[]})");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::Invariant);

  write(path, R"({"source_id":"e","image_width":8,"image_height":8,"global_caption":"",
                  "regions":[{"box":[0,0,1,1],"confidence":1.5,"caption":"c","token_count":1}]})");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::Invariant);

  write(path, R"({"source_id":"e","image_width":8,"image_height":8,"global_caption":"",
                  "regions":[{"box":[0,0,1,1],"confidence":0.5,"caption":"c","token_count":0}]})");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::Invariant);

  write(path, R"({"source_id":"e","image_width":8,"image_height":8,"global_caption":"",
                  "regions":[{"box":[0,0,0,0],"confidence":0,"caption":"","token_count":0},
                             {"box":[0,0,1,1],"confidence":0.5,"caption":"c","token_count":1}]})");
  EXPECT_EQ(kind_of([&] { load_scene(path); }), ErrorKind::Invariant);

  EXPECT_EQ(kind_of([&] { load_scene(temp_file("does_not_exist.json")); }), ErrorKind::Io);
}

TEST(SceneIo, RoundTripRandomScenes) {
  oracle::Gen g(2024);
  const auto path = temp_file("roundtrip.json");
  for (int n = 0; n < 1000; ++n) {
    const Scene s = random_scene(g);
    save_scene(s, path);
    const Scene back = load_scene(path);
    ASSERT_EQ(back, s) << "scene " << n;
  }
}

TEST(SceneIo, UnicodeCaptionBytesSurvive) {
  Scene s;
  s.source_id = "u";
  s.global_caption = "Möwe über dem Hafen · 港口的海鸥 🕊";
  s.regions.push_back({{0.1, 0.1, 0.4, 0.4, 0.8}, "ein rotes Boot ⛵", 3});
  const auto path = temp_file("unicode.json");
  save_scene(s, path);
  const Scene back = load_scene(path);
  EXPECT_EQ(back.global_caption, s.global_caption);
  EXPECT_EQ(back.regions[0].caption, s.regions[0].caption);
}

TEST(SceneIo, UnwritablePathIsIoError) {
  Scene s;
  EXPECT_EQ(kind_of([&] { save_scene(s, "/nonexistent_dir_ragsr/scene.json"); }), ErrorKind::Io);
}

TEST(SceneIo, DeclaredTokenCount) {
  EXPECT_EQ(declared_token_count(""), 0);
  EXPECT_EQ(declared_token_count("  a red  boat "), 3);
  EXPECT_EQ(declared_token_count("one"), 1);
  EXPECT_EQ(declared_token_count("a b c d", 2), 2);
}
