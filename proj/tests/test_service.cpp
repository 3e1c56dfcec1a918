// Copyright 2026 The emfplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <catch2/catch_amalgamated.hpp>

#include <httplib.h>

#include <thread>

#include "emfplan/io.hpp"
#include "emfplan/service.hpp"

using namespace emfplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

SceneSpec test_scene() { return generate_scene(21, 10, {.grid_size = 32, .size = {2, 5}}); }

Pixel first_outdoor(const SceneSpec& s, int skip = 0) {
  for (int r = 0; r < s.grid_size(); ++r)
    for (int c = 0; c < s.grid_size(); ++c)
      if (!s.is_building({r, c}) && skip-- == 0) return {r, c};
  throw std::logic_error("no outdoor pixel");
}

Pixel first_building(const SceneSpec& s) {
  for (int r = 0; r < s.grid_size(); ++r)
    for (int c = 0; c < s.grid_size(); ++c)
      if (s.is_building({r, c})) return {r, c};
  throw std::logic_error("no building");
}

json site(Pixel p) { return {{"row", p.row}, {"col", p.col}}; }

FloatGrid decode_map(const json& body, const char* key) {
  const auto bytes = io::base64_decode(body.at(key).get<std::string>());
  return io::float32_grid(bytes, body.at("shape")[0], body.at("shape")[1]);
}

fs::path tiny_gan_checkpoint() {
  const auto path = fs::temp_directory_path() / "emfplan_service_gan.ckpt";
  torch::manual_seed(0);
  GeneratorSpec g;
  g.depth = 5;
  g.base_filters = 4;
  UNetGenerator gen(g);
  save_map_model(path, *gen, EncodingSpec{}, 32, json::object(), json::object());
  return path;
}

fs::path tiny_dqn_checkpoint(const SceneSpec& scene) {
  const auto path = fs::temp_directory_path() / "emfplan_service_dqn.ckpt";
  EnvConfig ec;
  ec.candidate_stride = 4;
  const PlacementEnv env(scene, std::make_shared<OraclePredictor>(), ec);
  DqnConfig cfg;
  cfg.episodes = 3;
  auto run = train_dqn(env, {}, cfg);
  save_dqn(path, run.q, cfg, env, json::object());
  return path;
}

}  // namespace

TEST_CASE("health and missing scene") {
  PlannerService svc;
  auto r = svc.handle("GET", "/health");
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("scene_loaded") == false);
  r = svc.handle("GET", "/scene");
  REQUIRE(r.status == 404);
  REQUIRE(r.body.at("code") == "no_scene");
  REQUIRE(r.body.contains("message"));
  REQUIRE(svc.handle("POST", "/predict", R"({"tx_list": [], "mode": "oracle"})").status == 404);
  REQUIRE(svc.handle("GET", "/nope").status == 404);
  REQUIRE(svc.handle("DELETE", "/scene").status == 405);
}

TEST_CASE("scene endpoint echoes the loaded scene") {
  PlannerService svc;
  const auto scene = test_scene();
  svc.load_scene(scene);
  const auto r = svc.handle("GET", "/scene");
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("grid_size") == 32);
  REQUIRE(r.body.at("side_length_m") == 800.0);
  const auto png = io::base64_decode(r.body.at("building_png").get<std::string>());
  const auto img = io::decode_png_gray(png);
  for (std::size_t i = 0; i < img.size(); ++i)
    REQUIRE((img.raw()[i] == 255) == (scene.buildings().raw()[i] == 1));
}

TEST_CASE("predict in oracle mode") {
  PlannerService svc;
  const auto scene = test_scene();
  svc.load_scene(scene);
  const Pixel a = first_outdoor(scene), b = first_outdoor(scene, 200);

  SECTION("no checkpoint means 409 in surrogate mode") {
    const auto r = svc.handle("POST", "/predict", json{{"tx_list", {site(a)}}}.dump());
    REQUIRE(r.status == 409);
    REQUIRE(r.body.at("code") == "no_checkpoint");
  }
  SECTION("a building transmitter is rejected") {
    const auto r = svc.handle("POST", "/predict",
                              json{{"tx_list", {site(first_building(scene))}}, {"mode", "oracle"}}.dump());
    REQUIRE(r.status == 422);
    REQUIRE(r.body.at("code") == "tx_on_building");
    REQUIRE(svc.handle("POST", "/predict", json{{"tx_list", {{99, 0}}}, {"mode", "oracle"}}.dump()).status == 422);
  }
  SECTION("malformed bodies are 400") {
    REQUIRE(svc.handle("POST", "/predict", "{not json").status == 400);
    REQUIRE(svc.handle("POST", "/predict", R"({"tx_list": 3, "mode": "oracle"})").status == 400);
    REQUIRE(svc.handle("POST", "/predict", R"({"mode": "ray"})").status == 400);
  }
  SECTION("empty deployment gives floor maps and zero coverage") {
    const auto r = svc.handle("POST", "/predict", R"({"tx_list": [], "mode": "oracle"})");
    REQUIRE(r.status == 200);
    REQUIRE(r.body.at("cr") == 0.0);
    const auto rss = decode_map(r.body, "rss_map");
    const PropagationParams pp;
    for (float v : rss.raw()) REQUIRE(v == static_cast<float>(pp.rss_floor_dbm));
  }
  SECTION("maps and rates agree with a direct evaluation") {
    const auto r = svc.handle("POST", "/predict", json{{"tx_list", {site(a), site(b)}}, {"mode", "oracle"}}.dump());
    REQUIRE(r.status == 200);
    const std::vector<Pixel> sites{a, b};
    const auto maps = OraclePredictor().predict(scene, sites);
    const auto rss = decode_map(r.body, "rss_map");
    const auto exp = decode_map(r.body, "exposure_map");
    for (std::size_t i = 0; i < rss.size(); ++i) {
      REQUIRE(rss.raw()[i] == static_cast<float>(maps.rss_dbm.raw()[i]));
      REQUIRE(exp.raw()[i] == static_cast<float>(maps.exposure_dbuv.raw()[i]));
    }
    EnvConfig ec;
    ec.candidate_stride = 1;
    const auto e = PlacementEnv(scene, std::make_shared<OraclePredictor>(), ec).evaluate(sites);
    REQUIRE(std::abs(r.body.at("cr").get<double>() - e.cr) < 1e-9);
    REQUIRE(std::abs(r.body.at("er").get<double>() - e.er) < 1e-9);
    const auto mask = io::base64_decode(r.body.at("coverage_mask").get<std::string>());
    const auto outdoor = scene.outdoor_mask();
    std::size_t covered = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) covered += mask[i];
    REQUIRE(std::abs(double(covered) / scene.outdoor_count() - e.cr) < 1e-12);
  }
  SECTION("adding a transmitter never raises the exposure rate") {
    json tx = json::array();
    double prev = 1.0;
    for (int k = 0; k < 4; ++k) {
      tx.push_back(site(first_outdoor(scene, 97 * k)));
      const auto r = svc.handle("POST", "/predict", json{{"tx_list", tx}, {"mode", "oracle"}}.dump());
      REQUIRE(r.status == 200);
      const double er = r.body.at("er");
      REQUIRE(er <= prev);
      prev = er;
    }
  }
  SECTION("thresholds are overridable per request") {
    const auto body = json{{"tx_list", {site(a)}}, {"mode", "oracle"}, {"thresholds", {{"phi_dbm", -1000.0}}}};
    const auto r = svc.handle("POST", "/predict", body.dump());
    REQUIRE(r.status == 200);
    REQUIRE(r.body.at("cr") == 1.0);
    REQUIRE(r.body.at("thresholds").at("gamma_dbuv") == 70.0);
  }
  SECTION("identical requests give identical responses") {
    const auto body = json{{"tx_list", {site(a)}}, {"mode", "oracle"}}.dump();
    auto r1 = svc.handle("POST", "/predict", body).body;
    auto r2 = svc.handle("POST", "/predict", body).body;
    r1.erase("latency_ms");
    r2.erase("latency_ms");
    REQUIRE(r1 == r2);
  }
}

TEST_CASE("predict with a surrogate checkpoint") {
  PlannerService svc;
  const auto scene = test_scene();
  svc.load_scene(scene);
  svc.load_gan(tiny_gan_checkpoint());
  const auto r = svc.handle("POST", "/predict", json{{"tx_list", {site(first_outdoor(scene))}}}.dump());
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("mode") == "surrogate");
  REQUIRE(decode_map(r.body, "rss_map").size() == 32u * 32u);
  REQUIRE(svc.handle("GET", "/health").body.at("gan_loaded") == true);
}

TEST_CASE("suggest") {
  PlannerService svc;
  const auto scene = test_scene();
  svc.load_scene(scene);
  REQUIRE(svc.handle("POST", "/suggest", R"({"deployed": [], "n_bs": 1})").status == 409);
  svc.load_dqn(tiny_dqn_checkpoint(scene));

  auto r = svc.handle("POST", "/suggest", R"({"deployed": [], "n_bs": 1})");
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("placements").size() == 1);
  REQUIRE(r.body.at("per_step").size() == 1);
  REQUIRE(r.body.at("predictor") == "oracle");

  // Deploy the suggestion and ask for two more: none may collide.
  const auto first = r.body.at("placements")[0];
  r = svc.handle("POST", "/suggest", json{{"deployed", {first}}, {"n_bs", 2}}.dump());
  REQUIRE(r.status == 200);
  REQUIRE(r.body.at("placements").size() == 2);
  for (const auto& p : r.body.at("placements")) REQUIRE(p != first);
  REQUIRE(r.body.at("placements")[0] != r.body.at("placements")[1]);
  REQUIRE(svc.handle("POST", "/suggest", json{{"deployed", {first}}, {"n_bs", 2}}.dump()).body == r.body);

  REQUIRE(svc.handle("POST", "/suggest", json{{"deployed", {site(first_building(scene))}}}.dump()).status == 422);
  REQUIRE(svc.handle("POST", "/suggest", R"({"n_bs": 0})").status == 400);

  // A different lattice size cannot use this network.
  svc.load_scene(generate_scene(22, 30, {.grid_size = 32, .size = {2, 5}}));
  r = svc.handle("POST", "/suggest", R"({"n_bs": 1})");
  if (r.status != 200) REQUIRE(r.body.at("code") == "dqn_scene_mismatch");
}

TEST_CASE("HTTP round trip with concurrent clients and a scene swap") {
  PlannerService svc;
  const auto scene = test_scene();
  svc.load_scene(scene);
  const int port = svc.start_background();
  httplib::Client cli("127.0.0.1", port);
  auto h = cli.Get("/health");
  REQUIRE(h);
  REQUIRE(h->status == 200);
  REQUIRE(json::parse(h->body).at("status") == "ok");

  const auto body = json{{"tx_list", {site(first_outdoor(scene))}}, {"mode", "oracle"}}.dump();
  auto res = cli.Post("/predict", body, "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  const double cr = json::parse(res->body).at("cr");

  auto bad = cli.Post("/predict", "{", "application/json");
  REQUIRE(bad->status == 400);
  REQUIRE(json::parse(bad->body).at("code") == "bad_json");

  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 5; ++i) {
        auto r = c.Post("/predict", body, "application/json");
        if (r && r->status == 200 && json::parse(r->body).at("cr") == cr) ++ok;
      }
    });
  // Swapping in the same geometry mid-flight must not disturb anyone.
  svc.load_scene(scene);
  for (auto& w : workers) w.join();
  REQUIRE(ok == 20);
  svc.stop();
}
