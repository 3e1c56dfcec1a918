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

#include "emfplan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "emfplan/error.hpp"

namespace emfplan {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

GeneratorSpec generator_for(const GanProfile& p, int nominal) {
  GeneratorSpec g;
  g.depth = p.depth();
  g.base_filters = p.effective(nominal);
  return g;
}

DiscriminatorSpec discriminator_for(const GanProfile& p) {
  DiscriminatorSpec d;
  d.base_filters = p.effective(p.disc_filters);
  return d;
}

EvalReport untrained_scores(const GeneratorSpec& g, std::uint64_t seed, std::span<const Sample> test) {
  // Same seeding as train_gan, so this is the run's starting point.
  torch::manual_seed(seed);
  UNetGenerator gen(g);
  gen->eval();
  return evaluate_model(*gen, test);
}

ModelCell gan_cell(const GanProfile& p, const PreparedData& data, bool aug, int nominal, bool untrained,
                   const std::optional<std::filesystem::path>& ckpt_dir) {
  ModelCell cell;
  cell.model = "npe_gan";
  cell.augmented = aug;
  cell.nominal_filters = nominal;
  cell.effective_filters = p.effective(nominal);
  const auto& train = aug ? data.train_aug : data.train;
  for (auto seed : p.seeds) {
    auto cfg = p.train;
    cfg.seed = seed;
    if (ckpt_dir)
      cfg.checkpoint_path = *ckpt_dir / ("gan_" + std::string(aug ? "aug" : "noaug") + "_f" +
                                         std::to_string(nominal) + "_s" + std::to_string(seed) + ".ckpt");
    SeedScores s;
    s.seed = seed;
    const auto g = generator_for(p, nominal);
    if (untrained) s.untrained = untrained_scores(g, seed, data.test);
    const auto t0 = Clock::now();
    auto run = train_gan(g, discriminator_for(p), train, data.test, cfg, p.data.encoding);
    s.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    s.trained = run.history.back().eval ? *run.history.back().eval : evaluate_model(*run.generator, data.test);
    cell.seeds.push_back(s);
  }
  return cell;
}

ModelCell regressor_cell(const GanProfile& p, const PreparedData& data, const std::string& kind) {
  ModelCell cell;
  cell.model = kind;
  cell.augmented = true;
  cell.nominal_filters = p.regressor_filters;
  cell.effective_filters = p.effective(p.regressor_filters);
  const int depth = p.depth();
  const int width = cell.effective_filters;
  for (auto seed : p.seeds) {
    RegressorTrainConfig cfg;
    cfg.epochs = p.train.epochs;
    cfg.batch_size = p.train.batch_size;
    cfg.lr = p.train.g_lr;
    cfg.beta1 = p.train.g_beta1;
    cfg.beta2 = p.train.g_beta2;
    cfg.seed = seed;
    cfg.eval_each_epoch = false;
    auto factory = [&]() -> MapModel {
      if (kind == "unet_regressor") return std::make_shared<UNetRegressorImpl>(RegressorSpec{depth, width});
      return std::make_shared<ConvAutoencoderImpl>(AutoencoderSpec{width, 4});
    };
    SeedScores s;
    s.seed = seed;
    const auto t0 = Clock::now();
    auto run = train_regressor(factory, data.train_aug, data.test, cfg, p.data.encoding);
    s.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    s.trained = evaluate_model(*run.model, data.test, p.data.encoding);
    cell.seeds.push_back(s);
  }
  return cell;
}

std::string cell_row(const ModelCell& c) {
  std::string r = pad(c.model, 18) + pad(c.augmented ? "aug" : "no-aug", 8) +
                  pad(std::to_string(c.nominal_filters) + "/" + std::to_string(c.effective_filters), 10);
  for (auto ch : {MapChannel::kRss, MapChannel::kExposure}) {
    std::vector<double> rmse, ssim;
    for (const auto& s : c.seeds) {
      const auto& cs = ch == MapChannel::kRss ? s.trained.rss : s.trained.exposure;
      rmse.push_back(cs.rmse);
      ssim.push_back(cs.ssim);
    }
    r += pad(fmt("%.3f", c.median_mae(ch)), 9) + pad(fmt("%.3f", median(rmse)), 9) +
         pad(fmt("%.4f", median(ssim)), 9);
  }
  return r;
}

std::string table_header() {
  return pad("model", 18) + pad("data", 8) + pad("filters", 10) + pad("RSS MAE", 9) + pad("RMSE", 9) +
         pad("SSIM", 9) + pad("EXP MAE", 9) + pad("RMSE", 9) + pad("SSIM", 9) + "\n";
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

GanProfile GanProfile::toy() {
  GanProfile p;
  p.train.epochs = 30;
  return p;
}

GanProfile GanProfile::full() {
  GanProfile p;
  p.name = "full";
  p.data.grid_size = 128;
  p.data.n_scenes = 5000;
  p.data.building_size = {8, 24};
  p.width_divisor = 1;
  p.train.epochs = 100;
  return p;
}

int GanProfile::depth() const {
  int d = 0;
  while ((1 << (d + 1)) <= data.grid_size) ++d;
  return d;
}

nlohmann::json GanProfile::to_json() const {
  return {{"name", name},
          {"data", options_to_json(data)},
          {"val_ratio", val_ratio},
          {"seeds", seeds},
          {"filters", filters},
          {"width_divisor", width_divisor},
          {"disc_filters", disc_filters},
          {"regressor_filters", regressor_filters},
          {"depth", depth()},
          {"train", train.to_json()}};
}

PreparedData prepare_data(const GanProfile& p, const std::filesystem::path& dir) {
  bool reuse = false;
  if (std::filesystem::exists(dir / "manifest.json")) {
    const auto m = load_manifest(dir);
    reuse = options_to_json(m.options) == options_to_json(p.data);
  }
  const auto manifest = reuse ? load_manifest(dir) : generate_dataset(p.data, dir);
  const auto samples = load_samples(dir, manifest);
  auto parts = split(samples, p.val_ratio, p.data.seed);
  PreparedData out;
  out.train = std::move(parts.train);
  out.test = std::move(parts.test);
  out.train_aug = augment(out.train);
  return out;
}

double ModelCell::median_mae(MapChannel ch) const {
  std::vector<double> v;
  for (const auto& s : seeds) v.push_back(ch == MapChannel::kRss ? s.trained.rss.mae : s.trained.exposure.mae);
  return median(v);
}

double ModelCell::median_untrained_mae(MapChannel ch) const {
  std::vector<double> v;
  for (const auto& s : seeds)
    if (s.untrained) v.push_back(ch == MapChannel::kRss ? s.untrained->rss.mae : s.untrained->exposure.mae);
  return median(v);
}

nlohmann::json ModelCell::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : seeds) {
    nlohmann::json j = {{"seed", s.seed}, {"scores", emfplan::to_json(s.trained)}, {"train_seconds", s.train_seconds}};
    if (s.untrained) j["untrained"] = emfplan::to_json(*s.untrained);
    per.push_back(j);
  }
  return {{"model", model},
          {"augmented", augmented},
          {"filters_nominal", nominal_filters},
          {"filters_effective", effective_filters},
          {"median_mae", {{"rss", median_mae(MapChannel::kRss)}, {"exposure", median_mae(MapChannel::kExposure)}}},
          {"per_seed", per}};
}

const ModelCell& AblationReport::cell(bool augmented, int nominal_filters) const {
  for (const auto& c : cells)
    if (c.augmented == augmented && c.nominal_filters == nominal_filters) return c;
  throw InvalidArgument("no such ablation cell");
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) cs.push_back(c.to_json());
  const ModelCell* best = nullptr;
  for (const auto& c : cells)
    if (!best || c.median_mae(MapChannel::kRss) < best->median_mae(MapChannel::kRss)) best = &c;
  nlohmann::json j = {{"report", "ablation"}, {"config_hash", hash}, {"config", config}, {"cells", cs}};
  if (best) j["best_cell_by_rss_mae"] = {{"augmented", best->augmented}, {"filters_nominal", best->nominal_filters}};
  return j;
}

std::string AblationReport::to_text() const {
  std::string s = "Ablation (median over seeds, dB)  config " + hash + "\n" + table_header();
  for (const auto& c : cells) s += cell_row(c) + "\n";
  return s;
}

const ModelCell& ComparisonReport::cell(const std::string& model) const {
  for (const auto& c : cells)
    if (c.model == model) return c;
  throw InvalidArgument("no such model in comparison: " + model);
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) cs.push_back(c.to_json());
  return {{"report", "model_comparison"}, {"config_hash", hash}, {"config", config}, {"cells", cs}};
}

std::string ComparisonReport::to_text() const {
  std::string s = "Model comparison (median over seeds, dB)  config " + hash + "\n" + table_header();
  for (const auto& c : cells) s += cell_row(c) + "\n";
  return s;
}

AblationReport run_ablation(const GanProfile& p, const PreparedData& data, const AblationOptions& opts) {
  AblationReport r;
  r.config = p.to_json();
  r.config["report"] = "ablation";
  r.hash = config_hash(r.config);
  for (bool aug : {true, false}) {
    if (!aug && !opts.include_no_aug) continue;
    for (int f : p.filters) {
      if (!aug && !opts.no_aug_filters.empty() &&
          std::find(opts.no_aug_filters.begin(), opts.no_aug_filters.end(), f) == opts.no_aug_filters.end())
        continue;
      r.cells.push_back(gan_cell(p, data, aug, f, opts.record_untrained && aug, opts.checkpoint_dir));
    }
  }
  return r;
}

ComparisonReport run_model_comparison(const GanProfile& p, const PreparedData& data, const AblationReport* ablation) {
  ComparisonReport r;
  r.config = p.to_json();
  r.config["report"] = "model_comparison";
  r.hash = config_hash(r.config);
  const int widest = *std::max_element(p.filters.begin(), p.filters.end());
  std::optional<ModelCell> gan;
  if (ablation)
    for (const auto& c : ablation->cells)
      if (c.augmented && c.nominal_filters == widest) gan = c;
  r.cells.push_back(gan ? *gan : gan_cell(p, data, true, widest, false, std::nullopt));
  r.cells.push_back(regressor_cell(p, data, "unet_regressor"));
  r.cells.push_back(regressor_cell(p, data, "conv_autoencoder"));
  return r;
}

nlohmann::json PlacementProfile::to_json() const {
  return {{"grid_size", grid_size},
          {"side_length_m", side_length_m},
          {"n_buildings", n_buildings},
          {"building_size", {building_size.min_px, building_size.max_px}},
          {"scene_seeds", scene_seeds},
          {"n_bs", n_bs},
          {"candidate_stride", candidate_stride},
          {"random_trials", random_trials},
          {"thresholds", {{"phi_dbm", env.thresholds.phi_dbm},
                          {"gamma_dbuv", env.thresholds.gamma_dbuv},
                          {"lambda_er", env.thresholds.lambda_er}}},
          {"penalty", env.penalty},
          {"dqn", dqn.to_json()},
          {"candidate_limit", brute.candidate_limit},
          {"seed", seed}};
}

SceneSpec placement_scene(const PlacementProfile& p, std::uint64_t scene_seed) {
  SceneGenOptions g;
  g.grid_size = p.grid_size;
  g.side_length_m = p.side_length_m;
  g.size = p.building_size;
  return generate_scene(scene_seed, p.n_buildings, g);
}

bool PlacementRow::sandwich() const { return random.cr <= dqn.cr && dqn.cr <= brute.cr; }

double PlacementReport::mean_cr(const std::string& method, int n_bs) const {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.n_bs != n_bs) continue;
    const auto& res = method == "brute_force" ? r.brute : method == "random" ? r.random : r.dqn;
    s += res.cr;
    ++n;
  }
  return n ? s / n : std::nan("");
}

double PlacementReport::time_ratio(int n_bs) const {
  double bf = 0.0, dqn = 0.0;
  for (const auto& r : rows)
    if (r.n_bs == n_bs) {
      bf += r.brute.wall_time_s;
      dqn += r.dqn.wall_time_s;
    }
  return dqn > 0.0 ? bf / dqn : std::nan("");
}

double PlacementReport::max_dqn_inference_s() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.dqn.wall_time_s);
  return m;
}

bool PlacementReport::sandwich_holds() const {
  return std::all_of(rows.begin(), rows.end(), [](const PlacementRow& r) { return r.sandwich(); });
}

double PlacementReport::min_dqn_bf_ratio(int n_bs) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : rows)
    if (r.n_bs == n_bs) m = std::min(m, r.brute.cr > 0.0 ? r.dqn.cr / r.brute.cr : 1.0);
  return m;
}

nlohmann::json PlacementReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  std::vector<int> budgets;
  for (const auto& r : rows) {
    rs.push_back({{"scene_seed", r.scene_seed},
                  {"n_bs", r.n_bs},
                  {"brute_force", emfplan::to_json(r.brute)},
                  {"random", emfplan::to_json(r.random)},
                  {"dqn", emfplan::to_json(r.dqn)},
                  {"dqn_train_seconds", r.dqn_train_seconds},
                  {"sandwich", r.sandwich()}});
    if (std::find(budgets.begin(), budgets.end(), r.n_bs) == budgets.end()) budgets.push_back(r.n_bs);
  }
  nlohmann::json table = nlohmann::json::array();
  for (int b : budgets)
    table.push_back({{"n_bs", b},
                     {"cr_random", mean_cr("random", b)},
                     {"cr_dqn", mean_cr("dqn", b)},
                     {"cr_brute_force", mean_cr("brute_force", b)},
                     {"bf_over_dqn_time", time_ratio(b)},
                     {"min_dqn_over_bf_cr", min_dqn_bf_ratio(b)},
                     {"speedup_at_least_5x", time_ratio(b) >= 5.0}});
  return {{"report", "placement_comparison"},
          {"config_hash", hash},
          {"config", config},
          {"predictor", predictor},
          {"rows", rs},
          {"summary", table},
          {"sandwich_holds", sandwich_holds()},
          {"max_dqn_inference_s", max_dqn_inference_s()}};
}

std::string PlacementReport::to_text() const {
  std::ostringstream os;
  os << "Placement comparison (" << predictor << " predictor)  config " << hash << "\n";
  os << pad("scene", 8) << pad("BS", 4) << pad("random", 9) << pad("DQN", 9) << pad("brute", 9)
     << pad("BF s", 10) << pad("DQN s", 10) << pad("evals", 8) << "sandwich\n";
  for (const auto& r : rows)
    os << pad(std::to_string(r.scene_seed), 8) << pad(std::to_string(r.n_bs), 4) << pad(fmt("%.4f", r.random.cr), 9)
       << pad(fmt("%.4f", r.dqn.cr), 9) << pad(fmt("%.4f", r.brute.cr), 9) << pad(fmt("%.4f", r.brute.wall_time_s), 10)
       << pad(fmt("%.4f", r.dqn.wall_time_s), 10) << pad(std::to_string(r.brute.evaluations), 8)
       << (r.sandwich() ? "yes" : "NO") << "\n";
  return os.str();
}

PlacementReport run_placement_comparison(const PlacementProfile& p, const PredictorFactory& make_predictor) {
  const PredictorFactory factory =
      make_predictor ? make_predictor : PredictorFactory([] { return std::make_shared<OraclePredictor>(); });
  PlacementReport rep;
  rep.config = p.to_json();
  rep.predictor = factory()->name();
  rep.config["predictor"] = rep.predictor;
  rep.hash = config_hash(rep.config);
  for (auto scene_seed : p.scene_seeds) {
    const auto scene = placement_scene(p, scene_seed);
    for (int n_bs : p.n_bs) {
      EnvConfig ec = p.env;
      ec.candidate_stride = p.candidate_stride;
      ec.n_bs_budget = n_bs;
      // Each method gets its own predictor so no cache is shared between timings.
      auto env_for = [&] { return PlacementEnv(scene, factory(), ec); };
      PlacementRow row;
      row.scene_seed = scene_seed;
      row.n_bs = n_bs;
      row.brute = brute_force(env_for(), {}, n_bs, p.brute);
      std::mt19937_64 rng(p.seed * 0x9E3779B97F4A7C15ull + scene_seed * 16 + static_cast<std::uint64_t>(n_bs));
      row.random = random_search(env_for(), {}, n_bs, p.random_trials, rng);
      const auto train_env = env_for();
      auto run = train_dqn(train_env, {}, p.dqn);
      row.dqn_train_seconds = run.seconds;
      row.curve = run.curve;
      row.dqn = place(env_for(), {}, n_bs, run.q);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

}  // namespace emfplan
