#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "igeom/harness.hpp"
#include "igeom/render.hpp"

using namespace igeom;
using nlohmann::json;

namespace {

std::string validation_message(const json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc", 3) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("", 0) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config validation names the field") {
  CHECK(starts_with(validation_message({{"experiment", "nope"}}), "experiment"));
  CHECK(starts_with(validation_message({{"parameters", json::object()}}), "experiment"));
  CHECK(starts_with(validation_message({{"experiment", "martingale"}, {"parameters", {{"kappa", "two"}}}}),
                    "parameters.kappa"));
  CHECK(starts_with(validation_message({{"experiment", "martingale"}, {"parameters", {{"bogus", 1}}}}),
                    "parameters.bogus"));
  CHECK(starts_with(validation_message({{"experiment", "merge"}, {"seed", -3}}), "seed"));
  CHECK(starts_with(validation_message({{"experiment", "merge"}, {"runs", "many"}}), "runs"));
  CHECK(validation_message({{"experiment", "merge"}, {"seed", 4}}).empty());
  ExperimentConfig c;
  c.experiment = "varianceCR";
  c.parameters = {{"crDecrement", 0.01}, {"runs", 10}};
  try {
    run_experiment(c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(starts_with(e.what(), "parameters.crDecrement"));
  }
}

TEST_CASE("every experiment has a preset") {
  for (const auto& name : experiment_names()) CHECK(experiment_preset(name).is_object());
  CHECK_THROWS_AS(experiment_preset("nope"), ValidationError);
}

TEST_CASE("zero runs give an empty report") {
  for (const std::string name : {"driverSanity", "martingale", "varianceCR", "monotonicity", "merge", "cross", "boundaryHit"}) {
    ExperimentConfig c;
    c.experiment = name;
    c.parameters = {{"runs", 0}};
    const auto m = run_experiment(c);
    CHECK_FALSE(m.pass);
    CHECK(m.report.value("noData", false));
    CHECK(m.report["runs"] == 0);
  }
}

TEST_CASE("config hash") {
  ExperimentConfig a;
  a.experiment = "merge";
  a.parameters = {{"runs", 5}};
  a.seed = 9;
  ExperimentConfig b = a;
  b.jobs = 4;
  b.outDir = "/tmp/elsewhere";
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 64);
  b.seed = 10;
  CHECK(a.hash() != b.hash());
  const auto back = ExperimentConfig::from_json(a.to_json());
  CHECK(back.hash() == a.hash());
}

TEST_CASE("parallel map is scheduling independent") {
  const std::function<double(std::size_t)> f = [](std::size_t i) {
    Rng rng(stream_seed(7, i));
    double s = 0.0;
    for (int k = 0; k < 1000; ++k) s += rng.normal();
    return s;
  };
  const auto one = parallel_map<double>(64, 1, f);
  const auto three = parallel_map<double>(64, 3, f);
  CHECK(one == three);
  const std::function<int(std::size_t)> bad = [](std::size_t i) -> int {
    if (i == 5) throw std::runtime_error("boom");
    return 0;
  };
  CHECK_THROWS_AS(parallel_map<int>(10, 2, bad), std::runtime_error);
}

TEST_CASE("stream seeds") {
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
  CHECK(stream_seed(5, 3) == stream_seed(5, 3));
}

TEST_CASE("render a horizontal segment") {
  RenderSpec spec;
  spec.width = 101;
  spec.height = 51;
  spec.xmin = 0.0;
  spec.xmax = 1.0;
  spec.ymin = 0.0;
  spec.ymax = 0.5;
  const auto img = rasterize({{{{0.2, 0.25}, {0.8, 0.25}}, 0.0}}, spec);
  CHECK(img.count_not(spec.background) == 61);
  const Rgb ink = hue_to_rgb(0.0);
  for (int x = 20; x <= 80; ++x) CHECK(img.pixel(x, 25) == ink);
  CHECK(img.pixel(19, 25) == spec.background);
  CHECK(img.pixel(81, 25) == spec.background);
}

TEST_CASE("render hue order follows angle order") {
  FlowPath lo, hi;
  lo.points = {{-0.5, -0.5}, {0.5, -0.5}};
  lo.thetas = {-1.0, -1.0};
  hi.points = {{-0.5, 0.5}, {0.5, 0.5}};
  hi.thetas = {1.0, 1.0};
  RenderSpec spec;
  spec.width = spec.height = 101;
  const auto img = render_paths({hi, lo}, spec);
  CHECK(img.pixel(50, 75) == hue_to_rgb(0.0));
  CHECK(img.pixel(50, 25) == hue_to_rgb(0.8));
  CHECK(img.pixel(50, 75) != img.pixel(50, 25));
  CHECK_THROWS_AS(render_paths({}, spec), ValidationError);
  CHECK_THROWS_AS(render_curves({}, spec), ValidationError);
}

TEST_CASE("png output") {
  const auto dir = std::filesystem::temp_directory_path() / "igeom_unit_png";
  std::filesystem::create_directories(dir);
  RenderSpec spec;
  spec.width = 8;
  spec.height = 4;
  write_png(dir / "a.png", rasterize({{{{-1, 0}, {1, 0}}, 0.3}}, spec));
  std::ifstream in(dir / "a.png", std::ios::binary);
  char sig[8];
  in.read(sig, 8);
  CHECK(std::string(sig, 8) == std::string("\x89PNG\r\n\x1a\n", 8));
  std::filesystem::remove_all(dir);
}

TEST_CASE("fan figure matches the golden run and is reproducible") {
  const auto dir = std::filesystem::temp_directory_path() / "igeom_unit_fig";
  std::filesystem::remove_all(dir);
  ExperimentConfig c;
  c.experiment = "figure";
  c.seed = 1;
  c.outDir = dir / "a";
  const auto a = run_experiment(c);
  c.outDir = dir / "b";
  c.jobs = 2;
  const auto b = run_experiment(c);
  CHECK(a.pass);
  CHECK(a.report["pathCount"] == 12);
  CHECK(a.report["inkPixels"] == 12283);
  CHECK(a.report["csvDigest"] == b.report["csvDigest"]);
  CHECK(a.report["pixelDigest"] == b.report["pixelDigest"]);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t k = 0; k < a.outputs.size(); ++k) {
    CHECK(a.outputs[k].path == b.outputs[k].path);
    CHECK(a.outputs[k].sha256 == b.outputs[k].sha256);
    CHECK(a.outputs[k].sha256 == sha256_file(dir / "a" / a.outputs[k].path));
  }
  const auto manifest = a.to_json();
  for (const char* key : {"configHash", "seed", "toolVersion", "startedAt", "outputs", "passFail"}) CHECK(manifest.contains(key));
  CHECK(manifest["dirichletForm"] == "triangulation");
  CHECK(manifest["configHash"] == c.hash());
  CHECK(std::filesystem::exists(dir / "a" / "figure_manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("constants experiment reports tolerance and claim") {
  ExperimentConfig c;
  c.experiment = "constants";
  const auto m = run_experiment(c);
  CHECK(m.pass);
  for (const char* key : {"test", "params", "runs", "estimate", "stderr", "pass", "claim", "tolerance"}) CHECK(m.report.contains(key));
}
