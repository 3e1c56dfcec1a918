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

#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <functional>
#include <vector>

#include "emfplan/dqn_agent.hpp"
#include "emfplan/npe_gan.hpp"
#include "emfplan/placement_env.hpp"

namespace httplib {
class Server;
}

namespace emfplan {

/// Maps plus the threshold-dependent rates for one TX configuration.
struct Prediction {
  RadioMaps maps;
  BinaryGrid coverage;
  Evaluation eval;
};

/// Shared by POST /predict and `emfplan evaluate`, so both report the same
/// numbers for the same inputs.
Prediction predict_and_score(const SceneSpec& scene, const Predictor& predictor, std::span<const Pixel> sites,
                             const Thresholds& t);

nlohmann::json prediction_to_json(const Prediction& p, const Thresholds& t);

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP front end over one loaded scene and optional checkpoints. Loaded
/// state is immutable and replaced wholesale, so in-flight requests keep the
/// snapshot they started with.
class PlannerService {
 public:
  PlannerService();
  ~PlannerService();

  void load_scene(SceneSpec scene);
  void load_surrogate(std::shared_ptr<const Predictor> surrogate);
  void load_gan(const std::filesystem::path& checkpoint);
  void load_dqn(const std::filesystem::path& checkpoint);
  void set_thresholds(const Thresholds& t);

  /// Socket-free dispatch, used by the HTTP routes and by tests.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body = "") const;

  /// Blocks until stop(). Returns false if the port could not be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Dqn {
    LoadedDqn loaded;
    mutable std::mutex mu;  // forward passes share module buffers
  };
  struct State {
    std::optional<SceneSpec> scene;
    std::shared_ptr<const Predictor> surrogate;
    std::shared_ptr<Dqn> dqn;
    Thresholds thresholds;
  };

  std::shared_ptr<const State> snapshot() const;
  void update(const std::function<void(State&)>& fn);

  HttpResponse get_scene(const State& s) const;
  HttpResponse post_predict(const State& s, const nlohmann::json& req) const;
  HttpResponse post_suggest(const State& s, const nlohmann::json& req) const;

  mutable std::mutex state_mu_;
  std::shared_ptr<const State> state_;
  std::shared_ptr<const Predictor> oracle_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace emfplan
