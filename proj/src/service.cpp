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

#include "emfplan/service.hpp"

#include <httplib.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "emfplan/io.hpp"

namespace emfplan {
namespace {

using nlohmann::json;

HttpResponse error(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

std::string b64_floats(const DoubleGrid& g) {
  FloatGrid f(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) f.raw()[i] = static_cast<float>(g.raw()[i]);
  return io::base64_encode(io::float32_bytes(f));
}

Pixel parse_pixel(const json& j) {
  if (j.is_array() && j.size() == 2) return {j[0].get<int>(), j[1].get<int>()};
  if (j.is_object()) return {j.at("row").get<int>(), j.at("col").get<int>()};
  throw InvalidArgument("a site is {row, col} or [row, col]");
}

std::vector<Pixel> parse_sites(const json& req, const char* key) {
  std::vector<Pixel> out;
  if (!req.contains(key)) return out;
  if (!req.at(key).is_array()) throw InvalidArgument(std::string(key) + " must be an array");
  for (const auto& j : req.at(key)) out.push_back(parse_pixel(j));
  return out;
}

Thresholds parse_thresholds(const json& req, Thresholds t) {
  if (!req.contains("thresholds")) return t;
  const auto& j = req.at("thresholds");
  t.phi_dbm = j.value("phi_dbm", t.phi_dbm);
  t.gamma_dbuv = j.value("gamma_dbuv", t.gamma_dbuv);
  t.lambda_er = j.value("lambda_er", t.lambda_er);
  t.validate();
  return t;
}

json pixels_json(std::span<const Pixel> ps) {
  json a = json::array();
  for (Pixel p : ps) a.push_back({{"row", p.row}, {"col", p.col}});
  return a;
}

/// 422 for sites that cannot hold a transmitter, nullopt otherwise.
std::optional<HttpResponse> check_sites(const SceneSpec& scene, std::span<const Pixel> sites) {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Pixel p = sites[i];
    std::ostringstream where;
    where << p;
    if (!scene.contains(p)) return error(422, "out_of_bounds", "site " + where.str() + " is outside the scene");
    if (scene.is_building(p)) return error(422, "tx_on_building", "site " + where.str() + " is a building pixel");
    for (std::size_t k = 0; k < i; ++k)
      if (sites[k] == p) return error(422, "duplicate_site", "site " + where.str() + " listed twice");
  }
  return std::nullopt;
}

}  // namespace

Prediction predict_and_score(const SceneSpec& scene, const Predictor& predictor, std::span<const Pixel> sites,
                             const Thresholds& t) {
  Prediction p;
  p.maps = predictor.predict(scene, sites);
  const auto outdoor = scene.outdoor_mask();
  p.coverage = coverage_indicator(p.maps.rss_dbm, t.phi_dbm);
  for (std::size_t i = 0; i < p.coverage.size(); ++i) p.coverage.raw()[i] &= outdoor.raw()[i];
  p.eval.cr = coverage_rate(p.maps.rss_dbm, outdoor, t.phi_dbm);
  p.eval.er = exposure_rate(p.maps.exposure_dbuv, outdoor, t.gamma_dbuv);
  p.eval.feasible = p.eval.er >= t.lambda_er;
  return p;
}

json prediction_to_json(const Prediction& p, const Thresholds& t) {
  const int n = p.maps.rss_dbm.rows();
  return {{"shape", {n, n}},
          {"dtype", "float32"},
          {"rss_map", b64_floats(p.maps.rss_dbm)},
          {"exposure_map", b64_floats(p.maps.exposure_dbuv)},
          {"coverage_mask", io::base64_encode(p.coverage.raw())},
          {"coverage_mask_dtype", "uint8"},
          {"cr", p.eval.cr},
          {"er", p.eval.er},
          {"feasible", p.eval.feasible},
          {"reward", gated_reward(p.eval.cr, p.eval.er, t)},
          {"thresholds", {{"phi_dbm", t.phi_dbm}, {"gamma_dbuv", t.gamma_dbuv}, {"lambda_er", t.lambda_er}}}};
}

PlannerService::PlannerService()
    : state_(std::make_shared<const State>()), oracle_(std::make_shared<OraclePredictor>()) {}

PlannerService::~PlannerService() { stop(); }

std::shared_ptr<const PlannerService::State> PlannerService::snapshot() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

void PlannerService::update(const std::function<void(State&)>& fn) {
  // Copy on write; requests holding the old snapshot are unaffected.
  std::lock_guard lock(state_mu_);
  auto next = std::make_shared<State>(*state_);
  fn(*next);
  state_ = std::move(next);
}

void PlannerService::load_scene(SceneSpec scene) {
  update([&](State& s) { s.scene = std::move(scene); });
}

void PlannerService::load_surrogate(std::shared_ptr<const Predictor> surrogate) {
  update([&](State& s) { s.surrogate = std::move(surrogate); });
}

void PlannerService::load_gan(const std::filesystem::path& checkpoint) {
  load_surrogate(SurrogatePredictor::from_checkpoint(checkpoint));
}

void PlannerService::load_dqn(const std::filesystem::path& checkpoint) {
  auto d = std::make_shared<Dqn>();
  d->loaded = emfplan::load_dqn(checkpoint);
  update([&](State& s) { s.dqn = d; });
}

void PlannerService::set_thresholds(const Thresholds& t) {
  t.validate();
  update([&](State& s) { s.thresholds = t; });
}

HttpResponse PlannerService::handle(const std::string& method, const std::string& path,
                                    const std::string& body) const {
  const auto s = snapshot();
  try {
    if (method == "GET" && path == "/health")
      return {200,
              {{"status", "ok"},
               {"scene_loaded", s->scene.has_value()},
               {"gan_loaded", s->surrogate != nullptr},
               {"dqn_loaded", s->dqn != nullptr}}};
    if (method == "GET" && path == "/scene") return get_scene(*s);
    if (method == "POST" && (path == "/predict" || path == "/suggest")) {
      json req;
      try {
        req = body.empty() ? json::object() : json::parse(body);
      } catch (const json::exception& e) {
        return error(400, "bad_json", e.what());
      }
      if (!req.is_object()) return error(400, "bad_request", "request body must be a JSON object");
      return path == "/predict" ? post_predict(*s, req) : post_suggest(*s, req);
    }
    if (path == "/health" || path == "/scene" || path == "/predict" || path == "/suggest")
      return error(405, "method_not_allowed", method + " not supported on " + path);
    return error(404, "not_found", "no route " + path);
  } catch (const json::exception& e) {
    return error(400, "bad_request", e.what());
  } catch (const InvalidArgument& e) {
    return error(400, e.code(), e.what());
  } catch (const Error& e) {
    return error(500, e.code(), e.what());
  }
}

HttpResponse PlannerService::get_scene(const State& s) const {
  if (!s.scene) return error(404, "no_scene", "no scene loaded");
  const auto& sc = *s.scene;
  BinaryGrid img(sc.grid_size(), sc.grid_size());
  for (std::size_t i = 0; i < img.size(); ++i) img.raw()[i] = sc.buildings().raw()[i] ? 255 : 0;
  json tx = json::array();
  for (const auto& t : sc.transmitters())
    tx.push_back({{"row", t.position.row}, {"col", t.position.col}, {"power_dbm", t.power_dbm},
                  {"frequency_hz", t.frequency_hz}});
  return {200,
          {{"side_length_m", sc.side_length_m()},
           {"grid_size", sc.grid_size()},
           {"resolution_m", sc.resolution_m()},
           {"seed", sc.seed()},
           {"tx_list", tx},
           {"outdoor_pixels", sc.outdoor_count()},
           {"building_png", io::base64_encode(io::encode_png_gray(img))},
           {"thresholds",
            {{"phi_dbm", s.thresholds.phi_dbm},
             {"gamma_dbuv", s.thresholds.gamma_dbuv},
             {"lambda_er", s.thresholds.lambda_er}}}}};
}

HttpResponse PlannerService::post_predict(const State& s, const json& req) const {
  if (!s.scene) return error(404, "no_scene", "no scene loaded");
  const std::string mode = req.value("mode", "surrogate");
  if (mode != "surrogate" && mode != "oracle")
    return error(400, "bad_mode", "mode is surrogate or oracle");
  if (mode == "surrogate" && !s.surrogate) return error(409, "no_checkpoint", "no GAN checkpoint loaded");
  const auto sites = parse_sites(req, "tx_list");
  if (auto bad = check_sites(*s.scene, sites)) return *bad;
  const auto t = parse_thresholds(req, s.thresholds);
  const auto t0 = std::chrono::steady_clock::now();
  // An empty deployment radiates nothing: floor maps whatever the predictor.
  const Predictor& pred = mode == "oracle" || sites.empty() ? *oracle_ : *s.surrogate;
  const auto p = predict_and_score(*s.scene, pred, sites, t);
  json body = prediction_to_json(p, t);
  body["mode"] = mode;
  body["latency_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {200, body};
}

HttpResponse PlannerService::post_suggest(const State& s, const json& req) const {
  if (!s.scene) return error(404, "no_scene", "no scene loaded");
  if (!s.dqn) return error(409, "no_dqn", "no DQN checkpoint loaded");
  const auto deployed = parse_sites(req, "deployed");
  if (auto bad = check_sites(*s.scene, deployed)) return *bad;
  const int n_bs = req.value("n_bs", 1);
  if (n_bs < 1) return error(400, "invalid_argument", "n_bs must be >= 1");
  const auto t = parse_thresholds(req, s.thresholds);
  std::shared_ptr<const Predictor> pred = s.surrogate ? s.surrogate : oracle_;
  if (req.value("mode", "") == "oracle") pred = oracle_;
  EnvConfig cfg;
  cfg.thresholds = t;
  cfg.n_bs_budget = n_bs;
  cfg.candidate_stride = s.dqn->loaded.candidate_stride;
  const PlacementEnv env(*s.scene, pred, cfg);
  PlacementResult r;
  try {
    std::lock_guard lock(s.dqn->mu);
    r = place(env, deployed, n_bs, s.dqn->loaded.q);
  } catch (const ShapeMismatch& e) {
    return error(409, "dqn_scene_mismatch", e.what());
  }
  json steps = json::array();
  for (const auto& tr : r.trace)
    steps.push_back({{"step", tr.step},
                     {"action", tr.action},
                     {"row", tr.site.row},
                     {"col", tr.site.col},
                     {"cr", tr.cr},
                     {"er", tr.er},
                     {"reward", tr.reward}});
  return {200,
          {{"placements", pixels_json(r.placements)},
           {"cr", r.cr},
           {"er", r.er},
           {"feasible", r.feasible},
           {"per_step", steps},
           {"predictor", pred->name()}}};
}

namespace {

void install_routes(httplib::Server& srv, const PlannerService& svc) {
  auto bridge = [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto r = svc.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  for (const char* p : {"/health", "/scene", "/predict", "/suggest"}) {
    srv.Get(p, bridge);
    srv.Post(p, bridge);
  }
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json{{"code", "not_found"}, {"message", "no route " + req.path}}.dump(), "application/json");
  });
}

}  // namespace

bool PlannerService::listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install_routes(*server_, *this);
  return server_->listen(host, port);
}

int PlannerService::start_background(const std::string& host) {
  server_ = std::make_unique<httplib::Server>();
  install_routes(*server_, *this);
  const int port = server_->bind_to_any_port(host);
  if (port <= 0) throw IoError("could not bind a port on " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void PlannerService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace emfplan
