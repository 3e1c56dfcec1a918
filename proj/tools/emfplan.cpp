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

// emfplan command line: scene/oracle utilities, training, baselines,
// experiment reports, plots and the planner service.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "emfplan/harness.hpp"
#include "emfplan/io.hpp"
#include "emfplan/plots.hpp"
#include "emfplan/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emfplan;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path out = "out";
};

Pixel parse_site(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidArgument("site '" + s + "' must be ROW,COL");
  return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

std::vector<Pixel> parse_sites(const std::vector<std::string>& v) {
  std::vector<Pixel> out;
  for (const auto& s : v) out.push_back(parse_site(s));
  return out;
}

void emit(const Globals& g, const std::string& name, const json& j) {
  fs::create_directories(g.out);
  io::write_text(g.out / name, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
}

std::shared_ptr<const Predictor> predictor_for(const std::string& gan) {
  if (gan.empty()) return std::make_shared<OraclePredictor>();
  return SurrogatePredictor::from_checkpoint(gan);
}

struct ThresholdFlags {
  Thresholds t;
  void add(CLI::App* app) {
    app->add_option("--phi", t.phi_dbm, "coverage threshold [dBm]")->capture_default_str();
    app->add_option("--gamma", t.gamma_dbuv, "exposure limit [dBuV/m]")->capture_default_str();
    app->add_option("--lambda", t.lambda_er, "required exposure rate")->capture_default_str();
  }
};

GanProfile profile_named(const std::string& name) {
  if (name == "toy") return GanProfile::toy();
  if (name == "full") return GanProfile::full();
  throw InvalidArgument("profile is toy or full");
}

// An existing dataset directory wins over the profile's dataset options.
void adopt_dataset(GanProfile& p, const fs::path& dir) {
  if (fs::exists(dir / "manifest.json")) p.data = load_manifest(dir).options;
}

std::vector<double> read_curve_csv(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("episode,return", 0) != 0) throw IoError(path.string() + " is not a learning-curve CSV");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.find(',', a + 1);
    out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMF-aware base-station placement toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option values; [subcommand] tables apply per command");
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  // scene
  auto* c_scene = app.add_subcommand("scene", "generate a procedural scene");
  int sc_grid = 64, sc_buildings = 12, sc_bmin = 4, sc_bmax = 12;
  double sc_side = 800.0;
  std::vector<std::string> sc_tx;
  c_scene->add_option("--grid", sc_grid)->capture_default_str();
  c_scene->add_option("--side", sc_side, "side length [m]")->capture_default_str();
  c_scene->add_option("--buildings", sc_buildings)->capture_default_str();
  c_scene->add_option("--building-min", sc_bmin)->capture_default_str();
  c_scene->add_option("--building-max", sc_bmax)->capture_default_str();
  c_scene->add_option("--tx", sc_tx, "transmitter sites ROW,COL");

  // oracle
  auto* c_oracle = app.add_subcommand("oracle", "reference RSS/exposure maps of a scene");
  std::string or_scene;
  std::vector<std::string> or_tx;
  ThresholdFlags or_t;
  c_oracle->add_option("--scene", or_scene)->required();
  c_oracle->add_option("--tx", or_tx, "override the scene's transmitters, ROW,COL");
  or_t.add(c_oracle);

  // dataset
  auto* c_data = app.add_subcommand("dataset", "generate a training dataset");
  DatasetOptions ds;
  c_data->add_option("--n-scenes", ds.n_scenes)->capture_default_str();
  c_data->add_option("--grid", ds.grid_size)->capture_default_str();
  c_data->add_option("--tx-min", ds.tx_min)->capture_default_str();
  c_data->add_option("--tx-max", ds.tx_max)->capture_default_str();
  c_data->add_option("--buildings-min", ds.buildings_min)->capture_default_str();
  c_data->add_option("--buildings-max", ds.buildings_max)->capture_default_str();

  // train-gan
  auto* c_gan = app.add_subcommand("train-gan", "train the NPE-GAN surrogate");
  std::string tg_data, tg_profile = "toy";
  int tg_filters = 256, tg_epochs = -1, tg_divisor = -1;
  bool tg_noaug = false;
  c_gan->add_option("--data", tg_data, "dataset directory (generated if missing)")->required();
  c_gan->add_option("--profile", tg_profile, "toy | full")->capture_default_str();
  c_gan->add_option("--filters", tg_filters, "nominal first-layer width")->capture_default_str();
  c_gan->add_option("--width-divisor", tg_divisor, "divide nominal widths (default from profile)");
  c_gan->add_option("--epochs", tg_epochs, "default from profile");
  c_gan->add_flag("--no-aug", tg_noaug, "train without flip augmentation");

  // train-dqn
  auto* c_dqn = app.add_subcommand("train-dqn", "train the placement agent on one scene");
  std::string td_scene, td_gan;
  int td_nbs = 1, td_stride = 4;
  DqnConfig td_cfg;
  ThresholdFlags td_t;
  std::vector<std::string> td_pre;
  c_dqn->add_option("--scene", td_scene)->required();
  c_dqn->add_option("--gan", td_gan, "surrogate checkpoint (oracle when omitted)");
  c_dqn->add_option("--n-bs", td_nbs)->capture_default_str();
  c_dqn->add_option("--stride", td_stride, "candidate lattice stride")->capture_default_str();
  c_dqn->add_option("--episodes", td_cfg.episodes)->capture_default_str();
  c_dqn->add_option("--lr", td_cfg.learning_rate)->capture_default_str();
  c_dqn->add_option("--pre", td_pre, "pre-deployed sites ROW,COL");
  td_t.add(c_dqn);

  // evaluate
  auto* c_eval = app.add_subcommand("evaluate", "CR/ER of a deployment, or a checkpoint's test-set scores");
  std::string ev_scene, ev_gan, ev_data;
  std::vector<std::string> ev_tx;
  ThresholdFlags ev_t;
  c_eval->add_option("--scene", ev_scene);
  c_eval->add_option("--gan", ev_gan, "surrogate checkpoint (oracle when omitted)");
  c_eval->add_option("--tx", ev_tx, "sites ROW,COL");
  c_eval->add_option("--data", ev_data, "dataset directory: score --gan on its held-out split");
  ev_t.add(c_eval);

  // baseline
  auto* c_base = app.add_subcommand("baseline", "random search or brute-force placement");
  std::string bl_method = "brute", bl_scene, bl_gan;
  int bl_nbs = 1, bl_stride = 4, bl_trials = 1;
  std::size_t bl_limit = 3000;
  ThresholdFlags bl_t;
  std::vector<std::string> bl_pre;
  c_base->add_option("--method", bl_method)->check(CLI::IsMember({"random", "brute"}))->capture_default_str();
  c_base->add_option("--scene", bl_scene)->required();
  c_base->add_option("--gan", bl_gan, "surrogate checkpoint (oracle when omitted)");
  c_base->add_option("--n-bs", bl_nbs)->capture_default_str();
  c_base->add_option("--stride", bl_stride)->capture_default_str();
  c_base->add_option("--trials", bl_trials)->capture_default_str();
  c_base->add_option("--candidate-limit", bl_limit)->capture_default_str();
  c_base->add_option("--pre", bl_pre, "pre-deployed sites ROW,COL");
  bl_t.add(c_base);

  // ablation / compare
  auto* c_abl = app.add_subcommand("ablation", "augmentation x filter-width grid over seeds");
  auto* c_cmp = app.add_subcommand("compare", "NPE-GAN against the UNet regressor and the autoencoder");
  std::string ex_profile = "toy", ex_data;
  int ex_epochs = -1;
  for (auto* c : {c_abl, c_cmp}) {
    c->add_option("--profile", ex_profile, "toy | full")->capture_default_str();
    c->add_option("--data", ex_data, "dataset directory (default <out>/data)");
    c->add_option("--epochs", ex_epochs, "override the profile");
  }

  // placement
  auto* c_pl = app.add_subcommand("placement", "random vs DQN vs brute force on held-out scenes, with timing");
  PlacementProfile pp;
  std::string pl_gan;
  c_pl->add_option("--episodes", pp.dqn.episodes)->capture_default_str();
  c_pl->add_option("--grid", pp.grid_size)->capture_default_str();
  c_pl->add_option("--buildings", pp.n_buildings)->capture_default_str();
  c_pl->add_option("--stride", pp.candidate_stride)->capture_default_str();
  c_pl->add_option("--scene-seeds", pp.scene_seeds)->capture_default_str();
  c_pl->add_option("--n-bs", pp.n_bs)->capture_default_str();
  c_pl->add_option("--gan", pl_gan, "surrogate checkpoint (oracle when omitted)");

  // plots
  auto* c_plot = app.add_subcommand("plots", "learning curve and map panels as SVG");
  std::string pt_curve, pt_scene, pt_gan;
  ThresholdFlags pt_t;
  c_plot->add_option("--curve", pt_curve, "learning-curve CSV from train-dqn");
  c_plot->add_option("--scene", pt_scene, "scene manifest; its transmitters are drawn");
  c_plot->add_option("--gan", pt_gan, "add predicted panels from this checkpoint");
  pt_t.add(c_plot);

  // serve
  auto* c_srv = app.add_subcommand("serve", "HTTP planner service");
  std::string sv_scene, sv_gan, sv_dqn, sv_host = "127.0.0.1";
  int sv_port = 8080;
  c_srv->add_option("--scene", sv_scene);
  c_srv->add_option("--gan", sv_gan);
  c_srv->add_option("--dqn", sv_dqn);
  c_srv->add_option("--host", sv_host)->capture_default_str();
  c_srv->add_option("--port", sv_port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_scene) {
      SceneGenOptions o;
      o.grid_size = sc_grid;
      o.side_length_m = sc_side;
      o.size = {sc_bmin, sc_bmax};
      auto scene = generate_scene(g.seed, sc_buildings, o);
      if (!sc_tx.empty()) scene = scene.with_transmitters_at(parse_sites(sc_tx));
      fs::create_directories(g.out);
      save_scene(scene, g.out / "scene.json");
      std::cout << "wrote " << (g.out / "scene.json").string() << " (" << scene.outdoor_count()
                << " outdoor pixels)\n";
    } else if (*c_oracle) {
      auto scene = load_scene(or_scene);
      if (!or_tx.empty()) scene = scene.with_transmitters_at(parse_sites(or_tx));
      const auto maps = compute_maps(scene);
      save_maps(maps, g.out / "maps");
      std::vector<Pixel> sites;
      for (const auto& t : scene.transmitters()) sites.push_back(t.position);
      const auto p = predict_and_score(scene, OraclePredictor(), sites, or_t.t);
      emit(g, "oracle.json", {{"cr", p.eval.cr}, {"er", p.eval.er}, {"feasible", p.eval.feasible},
                              {"maps", (g.out / "maps").string()}});
    } else if (*c_data) {
      ds.seed = g.seed;
      const auto m = generate_dataset(ds, g.out);
      std::cout << "generated " << m.samples.size() << " samples into " << g.out.string() << " ("
                << m.skipped_infeasible << " infeasible scenes skipped)\n";
    } else if (*c_gan) {
      auto p = profile_named(tg_profile);
      if (tg_epochs > 0) p.train.epochs = tg_epochs;
      if (tg_divisor > 0) p.width_divisor = tg_divisor;
      p.train.seed = g.seed;
      fs::create_directories(g.out);
      p.train.checkpoint_path = g.out / "gan.ckpt";
      adopt_dataset(p, tg_data);
      const auto data = prepare_data(p, tg_data);
      GeneratorSpec gs;
      gs.depth = p.depth();
      gs.base_filters = p.effective(tg_filters);
      DiscriminatorSpec dsp;
      dsp.base_filters = p.effective(p.disc_filters);
      auto run = train_gan(gs, dsp, tg_noaug ? data.train : data.train_aug, data.test, p.train, p.data.encoding);
      json hist = json::array();
      for (const auto& e : run.history) hist.push_back(to_json(e));
      emit(g, "train_gan.json",
           {{"config", p.to_json()}, {"config_hash", config_hash(p.to_json())}, {"filters_nominal", tg_filters},
            {"augmented", !tg_noaug}, {"history", hist}, {"checkpoint", (g.out / "gan.ckpt").string()}});
    } else if (*c_dqn) {
      const auto scene = load_scene(td_scene);
      EnvConfig ec;
      ec.n_bs_budget = td_nbs;
      ec.candidate_stride = td_stride;
      ec.thresholds = td_t.t;
      const PlacementEnv env(scene, predictor_for(td_gan), ec);
      td_cfg.seed = g.seed;
      const auto pre = parse_sites(td_pre);
      auto run = train_dqn(env, pre, td_cfg);
      fs::create_directories(g.out);
      io::write_text(g.out / "curve.csv", curve_to_csv(run.curve));
      save_dqn(g.out / "dqn.ckpt", run.q, td_cfg, env, {{"scene", td_scene}, {"predictor", env.predictor().name()}});
      auto res = place(env, pre, td_nbs, run.q);
      write_trace(g.out / "trace.jsonl", res.trace);
      auto j = to_json(res);
      j["train_seconds"] = run.seconds;
      j["episodes"] = td_cfg.episodes;
      j["n_actions"] = env.n_actions();
      emit(g, "train_dqn.json", j);
    } else if (*c_eval) {
      if (!ev_data.empty()) {
        if (ev_gan.empty()) throw InvalidArgument("--data needs --gan");
        const auto loaded = load_map_model(ev_gan);
        const auto m = load_manifest(ev_data);
        const auto parts = split(load_samples(ev_data, m), 0.1, m.options.seed);
        emit(g, "evaluate.json", to_json(evaluate_model(*loaded.model, parts.test, loaded.encoding)));
      } else {
        if (ev_scene.empty()) throw InvalidArgument("evaluate needs --scene or --data");
        const auto scene = load_scene(ev_scene);
        const auto pred = predictor_for(ev_gan);
        const auto sites = parse_sites(ev_tx);
        const auto p = predict_and_score(scene, *pred, sites, ev_t.t);
        emit(g, "evaluate.json",
             {{"cr", p.eval.cr}, {"er", p.eval.er}, {"feasible", p.eval.feasible},
              {"reward", gated_reward(p.eval.cr, p.eval.er, ev_t.t)}, {"predictor", pred->name()}});
      }
    } else if (*c_base) {
      const auto scene = load_scene(bl_scene);
      EnvConfig ec;
      ec.n_bs_budget = bl_nbs;
      ec.candidate_stride = bl_stride;
      ec.thresholds = bl_t.t;
      const PlacementEnv env(scene, predictor_for(bl_gan), ec);
      const auto pre = parse_sites(bl_pre);
      PlacementResult r;
      if (bl_method == "brute") {
        BruteForceOptions bo;
        bo.candidate_limit = bl_limit;
        r = brute_force(env, pre, bl_nbs, bo);
      } else {
        std::mt19937_64 rng(g.seed);
        r = random_search(env, pre, bl_nbs, bl_trials, rng);
      }
      emit(g, "baseline_" + bl_method + ".json", to_json(r));
    } else if (*c_abl || *c_cmp) {
      auto p = profile_named(ex_profile);
      if (ex_epochs > 0) p.train.epochs = ex_epochs;
      const fs::path dir = ex_data.empty() ? g.out / "data" : fs::path(ex_data);
      if (!ex_data.empty()) adopt_dataset(p, dir);
      const auto data = prepare_data(p, dir);
      if (*c_abl) {
        AblationOptions ao;
        ao.checkpoint_dir = g.out / "checkpoints";
        fs::create_directories(*ao.checkpoint_dir);
        const auto r = run_ablation(p, data, ao);
        io::write_text(g.out / "ablation.txt", r.to_text());
        emit(g, "ablation.json", r.to_json());
        std::cout << r.to_text();
      } else {
        const auto r = run_model_comparison(p, data);
        io::write_text(g.out / "compare.txt", r.to_text());
        emit(g, "compare.json", r.to_json());
        std::cout << r.to_text();
      }
    } else if (*c_pl) {
      pp.seed = g.seed;
      pp.dqn.seed = g.seed;
      PredictorFactory f;
      if (!pl_gan.empty()) f = [&] { return std::shared_ptr<const Predictor>(SurrogatePredictor::from_checkpoint(pl_gan)); };
      const auto r = run_placement_comparison(pp, f);
      fs::create_directories(g.out);
      for (const auto& row : r.rows)
        io::write_text(g.out / ("curve_s" + std::to_string(row.scene_seed) + "_bs" + std::to_string(row.n_bs) + ".csv"),
                       curve_to_csv(row.curve));
      io::write_text(g.out / "placement.txt", r.to_text());
      emit(g, "placement.json", r.to_json());
      std::cout << r.to_text();
    } else if (*c_plot) {
      PlotInputs in;
      in.thresholds = pt_t.t;
      if (!pt_curve.empty()) in.returns = read_curve_csv(pt_curve);
      if (!pt_scene.empty()) {
        in.scene = load_scene(pt_scene);
        in.reference = compute_maps(*in.scene);
        if (!pt_gan.empty()) {
          auto loaded = load_map_model(pt_gan);
          in.predicted = predict_maps(*loaded.model, *in.scene, loaded.encoding);
        }
      }
      for (const auto& f : emit_plots(g.out, in)) std::cout << "wrote " << f.string() << "\n";
    } else if (*c_srv) {
      PlannerService svc;
      if (!sv_scene.empty()) svc.load_scene(load_scene(sv_scene));
      if (!sv_gan.empty()) svc.load_gan(sv_gan);
      if (!sv_dqn.empty()) svc.load_dqn(sv_dqn);
      std::cout << "listening on http://" << sv_host << ":" << sv_port << std::endl;
      if (!svc.listen(sv_host, sv_port)) throw IoError("could not listen on port " + std::to_string(sv_port));
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
