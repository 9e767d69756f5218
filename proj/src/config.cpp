// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/config.hpp"

#include "ttprune/detail/file_io.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ttprune::config {

namespace {

using nlohmann::json;

/// Typed access to one JSON object; remembers which keys were read so the
/// rest can be reported as unknown.
class Section {
public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }

  bool has(const std::string &key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json &raw(const std::string &key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string &key) { return {raw(key), where(key)}; }

  void real(const std::string &key, double &out) {
    if (!has(key)) {
      return;
    }
    const auto &v = j_.at(key);
    if (!v.is_number()) {
      throw ConfigError(where(key) + ": expected a number");
    }
    out = v.get<double>();
    if (!std::isfinite(out)) {
      throw ConfigError(where(key) + ": must be finite");
    }
  }

  template <typename Int> void integer(const std::string &key, Int &out) {
    if (!has(key)) {
      return;
    }
    const auto &v = j_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(where(key) + ": expected an integer");
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = static_cast<Int>(v.get<std::uint64_t>());
        return;
      }
      if (v.get<std::int64_t>() < 0) {
        throw ConfigError(where(key) + ": must be non-negative");
      }
    }
    const auto x = v.get<std::int64_t>();
    if (x < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
        static_cast<std::uint64_t>(x) > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      throw ConfigError(where(key) + ": out of range");
    }
    out = static_cast<Int>(x);
  }

  void boolean(const std::string &key, bool &out) {
    if (!has(key)) {
      return;
    }
    if (!j_.at(key).is_boolean()) {
      throw ConfigError(where(key) + ": expected true or false");
    }
    out = j_.at(key).get<bool>();
  }

  void string(const std::string &key, std::string &out) {
    if (!has(key)) {
      return;
    }
    if (!j_.at(key).is_string()) {
      throw ConfigError(where(key) + ": expected a string");
    }
    out = j_.at(key).get<std::string>();
  }

  void finish() const {
    for (const auto &item : j_.items()) {
      if (!seen_.contains(item.key())) {
        throw ConfigError(where(item.key()) + ": unknown key");
      }
    }
  }

  [[nodiscard]] std::string where(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

netmodel::NoiseMode parse_noise_mode(const std::string &s) {
  if (s == "density_full_band") {
    return netmodel::NoiseMode::kDensityFullBand;
  }
  if (s == "absolute") {
    return netmodel::NoiseMode::kAbsolute;
  }
  if (s == "density_allocated") {
    return netmodel::NoiseMode::kDensityAllocated;
  }
  throw ConfigError("network.noise_mode: expected density_full_band, absolute or "
                    "density_allocated");
}

DeltaT parse_delta_t(const json &v) {
  DeltaT dt;
  if (v.is_number()) {
    dt.relative = false;
    dt.value = v.get<double>();
  } else if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.empty() || s.back() != 'T') {
      throw ConfigError("network.delta_t: expected seconds or a string like \"0.7T\"");
    }
    s.pop_back();
    std::size_t used = 0;
    try {
      dt.value = std::stod(s, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ConfigError("network.delta_t: cannot parse multiplier in \"" + s + "T\"");
    }
  } else {
    throw ConfigError("network.delta_t: expected a number or a string");
  }
  if (!(dt.value > 0.0) || !std::isfinite(dt.value)) {
    throw ConfigError("network.delta_t: must be positive");
  }
  return dt;
}

void parse_network(Section s, RunConfig &cfg) {
  auto &n = cfg.network;
  s.real("bandwidth_hz", n.bandwidth_total_hz);
  double dbm = netmodel::watts_to_dbm(n.tx_power_w);
  s.real("tx_power_dbm", dbm);
  n.tx_power_w = netmodel::dbm_to_watts(dbm);
  std::string mode = "density_full_band";
  s.string("noise_mode", mode);
  n.noise_mode = parse_noise_mode(mode);
  double density_dbm = netmodel::watts_to_dbm(n.noise_density_w_per_hz);
  s.real("noise_density_dbm_per_hz", density_dbm);
  n.noise_density_w_per_hz = netmodel::dbm_to_watts(density_dbm);
  if (s.has("noise_power_dbm")) {
    double p = 0.0;
    s.real("noise_power_dbm", p);
    n.noise_power_w = netmodel::dbm_to_watts(p);
  }
  s.integer("quant_bits", n.quant_bits);
  s.real("cell_radius_m", n.cell_radius_m);
  if (s.has("delta_t")) {
    cfg.delta_t = parse_delta_t(s.raw("delta_t"));
  }
  s.real("pathloss_exponent", n.pathloss_exponent);
  s.real("reference_loss_db", n.reference_loss_db);
  s.boolean("fading", n.fading);
  s.finish();
  if (!cfg.delta_t.relative) {
    n.delta_t_s = cfg.delta_t.value;
  }
  netmodel::validate(n);
}

void parse_devices(Section s, RunConfig &cfg) {
  auto &r = cfg.devices;
  s.integer("count", r.count);
  s.real("min_distance_m", r.min_distance_m);
  s.real("cycles_per_weight", r.cycles_per_weight);
  s.real("cycles_spread", r.cycles_spread);
  s.real("cpu_freq_hz", r.cpu_freq_hz);
  s.real("freq_spread", r.freq_spread);
  if (s.has("roster")) {
    const auto &arr = s.raw("roster");
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError("devices.roster: expected a non-empty array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section d(arr[i], "devices.roster[" + std::to_string(i) + "]");
      netmodel::Device dev;
      dev.id = static_cast<int>(i);
      d.real("distance_m", dev.distance_m);
      d.real("cycles_per_weight", dev.cycles_per_weight);
      d.real("cpu_freq_hz", dev.cpu_freq_hz);
      dev.channel_gain = 0.0; // 0: derive from distance
      d.real("channel_gain", dev.channel_gain);
      d.finish();
      r.explicit_devices.push_back(dev);
    }
    r.count = r.explicit_devices.size();
  }
  s.finish();
  if (r.count < 1) {
    throw ConfigError("devices.count: must be >= 1");
  }
  if (!(r.min_distance_m > 0.0) || r.min_distance_m >= cfg.network.cell_radius_m) {
    throw ConfigError("devices.min_distance_m: must lie in (0, cell radius)");
  }
  if (!(r.cycles_spread >= 0.0 && r.cycles_spread < 1.0) ||
      !(r.freq_spread >= 0.0 && r.freq_spread < 1.0)) {
    throw ConfigError("devices: spreads must lie in [0, 1)");
  }
  if (!(r.cycles_per_weight > 0.0 && r.cpu_freq_hz > 0.0)) {
    throw ConfigError("devices: cycles_per_weight and cpu_freq_hz must be positive");
  }
}

void parse_dataset(Section s, RunConfig &cfg, const std::filesystem::path &base_dir) {
  auto &d = cfg.dataset;
  std::string source = "synthetic";
  s.string("source", source);
  if (source == "synthetic") {
    d.source = DataSource::kSynthetic;
  } else if (source == "idx") {
    d.source = DataSource::kIdx;
  } else {
    throw ConfigError("dataset.source: expected synthetic or idx");
  }
  if (s.has("synthetic")) {
    auto y = s.child("synthetic");
    y.integer("classes", d.synthetic.classes);
    y.integer("per_class", d.synthetic.per_class);
    y.integer("test_per_class", d.test_per_class);
    y.integer("input_dim", d.synthetic.input_dim);
    y.real("separation", d.synthetic.separation);
    y.real("noise_std", d.synthetic.noise_std);
    y.finish();
  }
  if (s.has("idx")) {
    auto x = s.child("idx");
    auto path = [&](const std::string &key, std::filesystem::path &out) {
      std::string v;
      x.string(key, v);
      if (!v.empty()) {
        std::filesystem::path p(v);
        out = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
      }
    };
    path("train_images", d.train_images);
    path("train_labels", d.train_labels);
    path("test_images", d.test_images);
    path("test_labels", d.test_labels);
    x.integer("train_limit", d.train_limit);
    x.integer("test_limit", d.test_limit);
    x.finish();
  }
  if (s.has("partition")) {
    auto p = s.child("partition");
    std::string mode = "iid";
    p.string("mode", mode);
    if (mode == "iid") {
      d.partition.mode = data::PartitionMode::kIid;
    } else if (mode == "label_skew") {
      d.partition.mode = data::PartitionMode::kLabelSkew;
    } else {
      throw ConfigError("dataset.partition.mode: expected iid or label_skew");
    }
    p.integer("shards_per_device", d.partition.shards_per_device);
    p.finish();
  }
  s.finish();
  if (d.source == DataSource::kIdx &&
      (d.train_images.empty() || d.train_labels.empty() || d.test_images.empty() ||
       d.test_labels.empty())) {
    throw ConfigError("dataset.idx: train/test image and label paths are required");
  }
  if (d.source == DataSource::kSynthetic && d.test_per_class < 1) {
    throw ConfigError("dataset.synthetic.test_per_class: must be >= 1");
  }
  if (d.partition.shards_per_device < 1) {
    throw ConfigError("dataset.partition.shards_per_device: must be >= 1");
  }
}

void parse_bound(Section s, RunConfig &cfg) {
  auto &b = cfg.bound;
  s.real("lipschitz", b.lipschitz);
  s.real("delta", b.delta);
  s.real("epsilon", b.epsilon);
  s.real("beta", b.beta);
  s.real("phi", b.phi);
  s.real("noise_scale", b.noise_scale);
  if (s.has("xi")) {
    s.real("xi", b.xi);
    cfg.xi_given = true;
  }
  s.finish();
}

void parse_solve(Section s, RunConfig &cfg) {
  const auto &arr = s.raw("tiers");
  if (!arr.is_array() || arr.empty()) {
    throw ConfigError("solve.tiers: expected a non-empty array");
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Section t(arr[i], "solve.tiers[" + std::to_string(i) + "]");
    allocator::TierProfile p;
    p.tier_index = static_cast<int>(i + 1);
    t.integer("tier", p.tier_index);
    t.integer("users", p.user_count);
    t.real("data", p.data_count);
    t.real("cycles_per_weight", p.avg_cycles_per_weight);
    t.real("cpu_freq_hz", p.avg_cpu_freq_hz);
    if (t.has("distance_m")) {
      double dist = 0.0;
      t.real("distance_m", dist);
      if (!(dist > 0.0)) {
        throw ConfigError(t.where("distance_m") + ": must be positive");
      }
      p.avg_gain = netmodel::path_gain(cfg.network, dist);
    }
    t.real("gain", p.avg_gain);
    t.integer("conv_weights", p.layout.conv_weight_count);
    t.integer("fc_weights", p.layout.fc_weight_count);
    p.band_sharers = p.user_count;
    t.integer("band_sharers", p.band_sharers);
    t.finish();
    if (p.tier_index < 1 || p.user_count < 1 || !(p.data_count >= 1.0) ||
        !(p.avg_cycles_per_weight > 0.0) || !(p.avg_cpu_freq_hz > 0.0) ||
        !(p.avg_gain > 0.0) || p.layout.fc_weight_count < 1 || p.band_sharers < 1) {
      throw ConfigError("solve.tiers[" + std::to_string(i) + "]: values out of range");
    }
    cfg.solve_tiers.push_back(p);
  }
  s.finish();
}

void validate_run(const RunConfig &cfg) {
  if (cfg.schemes.empty()) {
    throw ConfigError("schemes: at least one scheme is required");
  }
  if (cfg.rounds < 0) {
    throw ConfigError("training.rounds: must be >= 0");
  }
  if (cfg.local_epochs < 1) {
    throw ConfigError("training.local_epochs: must be >= 1");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw ConfigError("training.learning_rate: must be positive");
  }
  if (cfg.batch_size < 1) {
    throw ConfigError("training.batch_size: must be >= 1");
  }
  if (!(cfg.target_accuracy >= 0.0 && cfg.target_accuracy <= 1.0)) {
    throw ConfigError("target_accuracy: must lie in [0, 1]");
  }
  if (cfg.parallel < 1) {
    throw ConfigError("parallel: must be >= 1");
  }
  for (auto h : cfg.model.hidden_dims) {
    if (h < 1) {
      throw ConfigError("model.hidden: layer widths must be >= 1");
    }
  }
  auto probe = cfg.bound;
  probe.tier_count = 1;
  allocator::validate(probe);
}

tinynn::ModelSpec model_spec(const RunConfig &cfg, const data::LabeledDataset &train) {
  tinynn::ModelSpec spec;
  spec.input_dim = train.input_dim;
  spec.output_dim = train.num_classes;
  spec.hidden_dims = cfg.model.hidden_dims;
  spec.conv_width = cfg.model.conv_width;
  spec.seed = derive_seed({cfg.seed, 0x30de1ULL});
  return spec;
}

data::LabeledDataset head(const data::LabeledDataset &d, std::size_t limit) {
  if (limit == 0 || limit >= d.size()) {
    return d;
  }
  std::vector<std::size_t> idx(limit);
  for (std::size_t i = 0; i < limit; ++i) {
    idx[i] = i;
  }
  return data::subset(d, idx);
}

} // namespace

RunConfig parse_config(std::string_view json_text, const std::filesystem::path &base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section root(doc, "");
  if (root.has("network")) {
    parse_network(root.child("network"), cfg);
  }
  if (root.has("devices")) {
    parse_devices(root.child("devices"), cfg);
  }
  if (root.has("model")) {
    auto m = root.child("model");
    if (m.has("hidden")) {
      const auto &h = m.raw("hidden");
      if (!h.is_array()) {
        throw ConfigError("model.hidden: expected an array of widths");
      }
      cfg.model.hidden_dims.clear();
      for (const auto &v : h) {
        if (!v.is_number_unsigned()) {
          throw ConfigError("model.hidden: widths must be positive integers");
        }
        cfg.model.hidden_dims.push_back(v.get<std::size_t>());
      }
    }
    m.integer("conv_width", cfg.model.conv_width);
    m.finish();
  }
  if (root.has("dataset")) {
    parse_dataset(root.child("dataset"), cfg, base_dir);
  }
  if (root.has("training")) {
    auto t = root.child("training");
    t.integer("rounds", cfg.rounds);
    t.integer("local_epochs", cfg.local_epochs);
    t.real("learning_rate", cfg.learning_rate);
    t.integer("batch_size", cfg.batch_size);
    t.integer("parallel", cfg.parallel);
    t.finish();
  }
  if (root.has("schemes")) {
    const auto &arr = root.raw("schemes");
    if (!arr.is_array()) {
      throw ConfigError("schemes: expected an array of scheme names");
    }
    cfg.schemes.clear();
    for (const auto &v : arr) {
      if (!v.is_string()) {
        throw ConfigError("schemes: expected scheme names");
      }
      cfg.schemes.push_back(fedsim::parse_scheme(v.get<std::string>()));
    }
  }
  root.integer("seed", cfg.seed);
  root.real("target_accuracy", cfg.target_accuracy);
  if (root.has("bound")) {
    parse_bound(root.child("bound"), cfg);
  }
  if (root.has("solve")) {
    parse_solve(root.child("solve"), cfg);
  }
  root.finish();
  validate_run(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  const auto text = detail::read_text_file(path);
  return parse_config(text, path.parent_path());
}

std::vector<netmodel::Device> make_devices(const RunConfig &cfg) {
  const auto &r = cfg.devices;
  std::vector<netmodel::Device> out;
  if (!r.explicit_devices.empty()) {
    out = r.explicit_devices;
    for (auto &d : out) {
      if (d.channel_gain <= 0.0) {
        d.channel_gain = netmodel::path_gain(cfg.network, d.distance_m);
      }
    }
    return out;
  }
  const double r0 = r.min_distance_m;
  const double rr = cfg.network.cell_radius_m;
  for (std::size_t i = 0; i < r.count; ++i) {
    Rng rng(derive_seed({cfg.seed, 0xde71ceULL, i}));
    netmodel::Device d;
    d.id = static_cast<int>(i);
    d.distance_m = std::sqrt(r0 * r0 + rng.uniform() * (rr * rr - r0 * r0));
    d.cycles_per_weight = r.cycles_per_weight * (1.0 + r.cycles_spread * (2.0 * rng.uniform() - 1.0));
    d.cpu_freq_hz = r.cpu_freq_hz * (1.0 + r.freq_spread * (2.0 * rng.uniform() - 1.0));
    d.channel_gain = netmodel::path_gain(cfg.network, d.distance_m);
    out.push_back(d);
  }
  return out;
}

Datasets load_datasets(const RunConfig &cfg) {
  const auto &d = cfg.dataset;
  Datasets out;
  if (d.source == DataSource::kSynthetic) {
    auto spec = d.synthetic;
    spec.per_class = d.synthetic.per_class + d.test_per_class;
    spec.seed = derive_seed({cfg.seed, 0xda7aULL});
    const auto all = data::generate_synthetic(spec).data;
    // Rows are interleaved by class, so a prefix split keeps both halves balanced.
    const std::size_t n_train = d.synthetic.per_class * d.synthetic.classes;
    std::vector<std::size_t> train_idx(n_train);
    std::vector<std::size_t> test_idx(all.size() - n_train);
    for (std::size_t i = 0; i < all.size(); ++i) {
      (i < n_train ? train_idx[i] : test_idx[i - n_train]) = i;
    }
    out.train = data::subset(all, train_idx);
    out.test = data::subset(all, test_idx);
  } else {
    out.train = head(data::load_idx(d.train_images, d.train_labels), d.train_limit);
    out.test = head(data::load_idx(d.test_images, d.test_labels), d.test_limit);
    const std::size_t classes = std::max(out.train.num_classes, out.test.num_classes);
    out.train.num_classes = classes;
    out.test.num_classes = classes;
    if (out.train.input_dim != out.test.input_dim) {
      throw ConfigError("dataset.idx: train and test image sizes differ");
    }
  }
  data::validate(out.train);
  data::validate(out.test);
  if (out.train.num_classes < 2) {
    throw ConfigError("dataset: need at least two classes");
  }
  return out;
}

fedsim::ExperimentSetup prepare_experiment(const RunConfig &cfg) {
  auto sets = load_datasets(cfg);
  fedsim::ExperimentSetup s;
  s.net = cfg.network;
  s.devices = make_devices(cfg);
  auto part = cfg.dataset.partition;
  part.seed = derive_seed({cfg.seed, 0x9a27ULL});
  s.shards = data::partition(sets.train, s.devices.size(), part);
  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    s.devices[i].data_count = s.shards[i].size();
  }
  s.eval_set = std::move(sets.test);
  s.model = model_spec(cfg, sets.train);
  s.local_epochs = cfg.local_epochs;
  s.learning_rate = cfg.learning_rate;
  s.batch_size = cfg.batch_size;
  s.rounds = cfg.rounds;
  s.seed = cfg.seed;
  s.parallel = cfg.parallel;

  const auto layout = tinynn::layout_of(s.model);
  if (cfg.delta_t.relative) {
    const auto times = fedsim::profile_round_times(s.devices, s.net, layout, s.local_epochs);
    s.net.delta_t_s = cfg.delta_t.value * *std::max_element(times.begin(), times.end());
  }
  netmodel::validate(s.net);
  for (const auto &dev : s.devices) {
    netmodel::validate(dev, s.net);
  }
  s.consts = cfg.bound;
  const auto plan = fedsim::profile_and_assign(s.devices, s.net, layout, s.local_epochs);
  s.consts.tier_count = plan.tier_count;
  if (!cfg.xi_given) {
    s.consts.xi = plan.tier_count / 2.0;
  }
  return s;
}

std::vector<allocator::TierProfile> solve_profiles(const RunConfig &cfg,
                                                   netmodel::NetworkConfig &resolved_network) {
  resolved_network = cfg.network;
  if (!cfg.solve_tiers.empty()) {
    if (cfg.delta_t.relative) {
      throw ConfigError("solve: explicit tiers need an absolute network.delta_t");
    }
    return cfg.solve_tiers;
  }
  const auto s = prepare_experiment(cfg);
  resolved_network = s.net;
  const auto layout = tinynn::layout_of(s.model);
  const auto plan = fedsim::profile_and_assign(s.devices, s.net, layout, s.local_epochs);
  std::vector<allocator::TierProfile> out;
  for (int m = 1; m <= plan.tier_count; ++m) {
    const auto &members = plan.members[static_cast<std::size_t>(m - 1)];
    if (members.empty()) {
      continue;
    }
    allocator::TierProfile p;
    p.tier_index = m;
    p.user_count = members.size();
    p.band_sharers = members.size();
    p.layout = layout;
    p.data_count = plan.tier_data[static_cast<std::size_t>(m - 1)];
    double c = 0.0;
    double cf = 0.0;
    double se = 0.0;
    for (auto d : members) {
      c += s.devices[d].cycles_per_weight;
      cf += s.devices[d].cycles_per_weight / s.devices[d].cpu_freq_hz;
      se += netmodel::spectral_efficiency(s.net, s.devices[d].channel_gain, 1.0);
    }
    const auto n = static_cast<double>(members.size());
    p.avg_cycles_per_weight = c / n;
    p.avg_cpu_freq_hz = c / cf;
    p.avg_gain = (std::exp2(se / n) - 1.0) * netmodel::noise_power(s.net, 1.0) / s.net.tx_power_w;
    out.push_back(p);
  }
  return out;
}

std::vector<std::vector<double>> rho_history(const fedsim::ExperimentResult &result) {
  const auto m = static_cast<std::size_t>(result.plan.tier_count);
  std::vector<std::vector<double>> out;
  for (const auto &r : result.rounds) {
    std::vector<double> row(m, 0.0);
    for (const auto &t : r.tiers) {
      row[static_cast<std::size_t>(t.tier - 1)] = t.rho_star;
    }
    out.push_back(std::move(row));
  }
  return out;
}

bound::BoundReport run_bound_report(const fedsim::ExperimentResult &result,
                                    const allocator::BoundConstants &consts) {
  const auto &plan = result.plan;
  std::vector<allocator::TierProfile> tiers;
  for (int m = 1; m <= plan.tier_count; ++m) {
    allocator::TierProfile p;
    p.tier_index = m;
    p.user_count = plan.members[static_cast<std::size_t>(m - 1)].size();
    // An empty tier has S_m = 0 and contributes nothing; D_m = 1 avoids 0/0.
    p.data_count = std::max(1.0, plan.tier_data[static_cast<std::size_t>(m - 1)]);
    tiers.push_back(p);
  }
  double best = result.initial.loss;
  for (const auto &r : result.rounds) {
    best = std::min(best, r.loss);
  }
  return bound::evaluate_bound(consts, tiers, rho_history(result),
                               static_cast<int>(result.rounds.size()),
                               result.initial.loss - best);
}

std::string summary_json(const fedsim::ExperimentResult &result, const RunConfig &cfg,
                         const bound::BoundReport &report) {
  json j;
  j["scheme"] = std::string(fedsim::scheme_name(result.scheme));
  j["rounds"] = result.rounds.size();
  j["tier_count"] = result.plan.tier_count;
  j["slowest_round_time_s"] = result.plan.slowest_round_time;
  j["initial_accuracy"] = result.initial.accuracy;
  j["initial_loss"] = result.initial.loss;
  j["target_accuracy"] = cfg.target_accuracy;
  if (result.rounds.empty()) {
    j["final_accuracy"] = result.initial.accuracy;
    j["final_loss"] = result.initial.loss;
    j["total_time_s"] = 0.0;
    j["total_uplink_bits"] = 0;
  } else {
    const auto &last = result.rounds.back();
    j["final_accuracy"] = last.accuracy;
    j["final_loss"] = last.loss;
    j["total_time_s"] = last.cum_time_s;
    j["total_uplink_bits"] = last.cum_uplink_bits;
  }
  const auto hit = fedsim::first_round_reaching(result.rounds, cfg.target_accuracy);
  if (hit) {
    const auto &r = result.rounds[*hit];
    j["round_to_target"] = r.round;
    j["time_to_target_s"] = r.cum_time_s;
    j["bits_to_target"] = r.cum_uplink_bits;
  } else {
    j["round_to_target"] = nullptr;
    j["time_to_target_s"] = nullptr;
    j["bits_to_target"] = nullptr;
  }
  std::size_t dropped = 0;
  std::size_t uploads = 0;
  double rho_sum = 0.0;
  for (const auto &r : result.rounds) {
    for (const auto &d : r.devices) {
      if (d.uploaded) {
        ++uploads;
        rho_sum += d.pruning_ratio;
      } else {
        ++dropped;
      }
    }
  }
  j["uploads"] = uploads;
  j["dropped_uploads"] = dropped;
  j["mean_device_pruning_ratio"] = uploads > 0 ? rho_sum / static_cast<double>(uploads) : 0.0;
  j["broadcast_time_s"] = 0.0;
  j["bound"] = {{"rhs_total", report.rhs_total},       {"term_init", report.term_init},
                {"term_pruning", report.term_pruning}, {"term_drift", report.term_drift},
                {"term_mixed", report.term_mixed},     {"omega1", report.omega1},
                {"omega2", report.omega2}};
  return j.dump(2) + "\n";
}

} // namespace ttprune::config
