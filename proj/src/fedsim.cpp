// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/fedsim.hpp"

#include "ttprune/detail/file_io.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ttprune::fedsim {

namespace {

constexpr double kBoundaryRelTol = 1e-9;
constexpr std::uint64_t kFadingStream = 0xfade;
constexpr std::uint64_t kTrainStream = 0x7a11;

void rebuild_members(TierPlan &plan, std::span<const Device> devices) {
  plan.members.assign(static_cast<std::size_t>(plan.tier_count), {});
  plan.tier_data.assign(static_cast<std::size_t>(plan.tier_count), 0.0);
  for (std::size_t d = 0; d < plan.assignment.size(); ++d) {
    const auto m = static_cast<std::size_t>(plan.assignment[d] - 1);
    plan.members[m].push_back(d);
    plan.tier_data[m] += static_cast<double>(devices[d].data_count);
  }
}

/// Tier-average representative: mean c/f and the gain whose spectral
/// efficiency is the members' mean spectral efficiency.
allocator::TierProfile tier_profile(int tier, std::span<const std::size_t> members,
                                    std::span<const Device> devices,
                                    std::span<const double> gains, const NetworkConfig &cfg,
                                    const pruning::LayerLayout &layout) {
  allocator::TierProfile p;
  p.tier_index = tier;
  p.user_count = members.size();
  p.band_sharers = members.size();
  p.layout = layout;
  p.data_count = 0.0;
  double sum_c = 0.0;
  double sum_c_over_f = 0.0;
  double sum_se = 0.0;
  for (auto d : members) {
    const auto &dev = devices[d];
    p.data_count += static_cast<double>(dev.data_count);
    sum_c += dev.cycles_per_weight;
    sum_c_over_f += dev.cycles_per_weight / dev.cpu_freq_hz;
    sum_se += netmodel::spectral_efficiency(cfg, gains[d], 1.0);
  }
  const auto n = static_cast<double>(members.size());
  p.avg_cycles_per_weight = sum_c / n;
  p.avg_cpu_freq_hz = sum_c / sum_c_over_f;
  const double snr = std::exp2(sum_se / n) - 1.0;
  p.avg_gain = snr * netmodel::noise_power(cfg, 1.0) / cfg.tx_power_w;
  return p;
}

allocator::TierProfile device_profile(int tier, const Device &dev, double gain,
                                      const pruning::LayerLayout &layout) {
  allocator::TierProfile p;
  p.tier_index = tier;
  p.user_count = 1;
  p.band_sharers = 1;
  p.data_count = static_cast<double>(dev.data_count);
  p.avg_cycles_per_weight = dev.cycles_per_weight;
  p.avg_cpu_freq_hz = dev.cpu_freq_hz;
  p.avg_gain = gain;
  p.layout = layout;
  return p;
}

/// Smallest ratio >= rho whose floor-rounded pruned count is ceil(rho W_fc),
/// so the surviving weight count never exceeds (1 - rho) W_fc.
double quantize_ratio_up(double rho, std::size_t fc_weight_count) {
  if (rho <= 0.0) {
    return 0.0;
  }
  const auto wf = static_cast<double>(fc_weight_count);
  const double needed = std::min(std::ceil(rho * wf), wf);
  if (needed >= wf) {
    return 1.0;
  }
  double r = needed / wf;
  while (static_cast<double>(pruning::pruned_count(fc_weight_count, r)) < needed) {
    r = std::nextafter(r, 2.0);
  }
  return r;
}

struct TrainJob {
  std::size_t device = 0;
  int tier = 1;
  double ratio = 0.0;
};

struct TrainResult {
  std::vector<double> weights;
  pruning::PruningMask mask;
};

TrainResult train_device(const ExperimentSetup &s, const std::vector<double> &base,
                         const pruning::LayerLayout &layout, const TrainJob &job, int round) {
  const auto &dev = s.devices[job.device];
  const auto &shard = s.shards[job.device];
  const std::uint64_t seed =
      derive_seed({s.seed, static_cast<std::uint64_t>(round),
                   static_cast<std::uint64_t>(dev.id), kTrainStream});

  // Importance from one probe step on the first mini-batch of epoch 0.
  const auto order = tinynn::epoch_order(shard.size(), seed, 0);
  const std::size_t len = std::min(s.batch_size, order.size());
  std::vector<double> grad(base.size());
  tinynn::loss_and_gradient(s.model, base, shard, std::span(order).first(len), grad);
  std::vector<double> probe(base.size());
  for (std::size_t j = 0; j < base.size(); ++j) {
    probe[j] = base[j] - s.learning_rate * grad[j];
  }
  TrainResult out;
  out.mask = pruning::build_mask(pruning::importance_scores(base, probe), layout, job.ratio);

  tinynn::LocalTrainParams params;
  params.epochs = s.local_epochs;
  params.learning_rate = s.learning_rate;
  params.batch_size = s.batch_size;
  params.seed = seed;
  out.weights = tinynn::local_update(s.model, {base, layout}, out.mask, shard, params).values;
  return out;
}

std::vector<TrainResult> train_all(const ExperimentSetup &s,
                                   const std::vector<std::vector<double>> &bases,
                                   const pruning::LayerLayout &layout,
                                   const std::vector<TrainJob> &jobs, int round) {
  std::vector<TrainResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto &base = bases[static_cast<std::size_t>(jobs[i].tier - 1)];
        results[i] = train_device(s, base, layout, jobs[i], round);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, s.parallel), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto &t : pool) {
      t.join();
    }
  }
  for (const auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_checkpoint(const std::filesystem::path &dir, int round,
                      const tinynn::WeightVector &global,
                      const std::vector<TrainJob> &jobs, const std::vector<TrainResult> &results,
                      std::span<const Device> devices) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create checkpoint directory " + dir.string());
  }
  char name[64];
  std::snprintf(name, sizeof name, "global_round_%04d.ttpw", round);
  detail::write_file(dir / name, tinynn::serialize_weights(global));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::snprintf(name, sizeof name, "mask_round_%04d_device_%04d.ttpm", round,
                  devices[jobs[i].device].id);
    detail::write_file(dir / name, pruning::serialize_mask(results[i].mask));
  }
}

} // namespace

std::vector<double> profile_round_times(std::span<const Device> devices, const NetworkConfig &cfg,
                                        const pruning::LayerLayout &layout, int local_epochs) {
  if (devices.empty()) {
    throw std::invalid_argument("profile_round_times: no devices");
  }
  const double share = 1.0 / static_cast<double>(devices.size());
  std::vector<double> times;
  times.reserve(devices.size());
  for (const auto &dev : devices) {
    times.push_back(netmodel::round_latency(cfg, dev, layout.total(), local_epochs, share).total_s);
  }
  return times;
}

TierPlan assign_tiers(std::span<const double> round_times, std::span<const Device> devices,
                      double delta_t_s) {
  if (round_times.empty() || round_times.size() != devices.size()) {
    throw std::invalid_argument("assign_tiers: need one round time per device");
  }
  if (!(delta_t_s > 0.0)) {
    throw std::invalid_argument("assign_tiers: delta_t must be positive");
  }
  TierPlan plan;
  plan.profiled_times.assign(round_times.begin(), round_times.end());
  plan.slowest_round_time = *std::max_element(round_times.begin(), round_times.end());
  plan.assignment.reserve(round_times.size());
  for (double t : round_times) {
    const double slots = t / delta_t_s * (1.0 - kBoundaryRelTol);
    plan.assignment.push_back(std::max(1, static_cast<int>(std::ceil(slots))));
  }
  plan.tier_count = *std::max_element(plan.assignment.begin(), plan.assignment.end());
  rebuild_members(plan, devices);
  return plan;
}

TierPlan profile_and_assign(std::span<const Device> devices, const NetworkConfig &cfg,
                            const pruning::LayerLayout &layout, int local_epochs) {
  const auto times = profile_round_times(devices, cfg, layout, local_epochs);
  return assign_tiers(times, devices, cfg.delta_t_s);
}

TierPlan reassign_device(const TierPlan &plan, std::span<const Device> devices,
                         std::size_t device_index, int new_tier) {
  if (device_index >= plan.assignment.size()) {
    throw std::invalid_argument("reassign_device: device index out of range");
  }
  if (new_tier < 1 || new_tier > plan.tier_count + 1) {
    throw std::invalid_argument("reassign_device: tier out of range");
  }
  TierPlan out = plan;
  out.assignment[device_index] = new_tier;
  out.tier_count = *std::max_element(out.assignment.begin(), out.assignment.end());
  out.tier_count = std::max(out.tier_count, plan.tier_count);
  rebuild_members(out, devices);
  return out;
}

bool participates(int tier, int round) {
  if (tier < 1 || round < 1) {
    throw std::invalid_argument("participates: tier and round must be >= 1");
  }
  return round % tier == 0;
}

std::vector<double> AggregationWeights::values() const {
  std::vector<double> out;
  out.reserve(numerators.size());
  for (auto n : numerators) {
    out.push_back(static_cast<double>(n) / static_cast<double>(denominator));
  }
  return out;
}

AggregationWeights aggregation_weights(int round, int tier_count) {
  if (round < 1 || tier_count < 1) {
    throw std::invalid_argument("aggregation_weights: round and tier count must be >= 1");
  }
  AggregationWeights w;
  w.denominator = 0;
  for (int j = 1; j <= tier_count; ++j) {
    w.denominator += round / j;
  }
  for (int m = 1; m <= tier_count; ++m) {
    w.numerators.push_back(round / (tier_count + 1 - m));
  }
  return w;
}

std::vector<double> intra_tier_aggregate(std::span<const std::vector<double>> models,
                                         std::span<const double> data_counts) {
  if (models.empty()) {
    throw std::invalid_argument("intra_tier_aggregate: empty participation set");
  }
  if (models.size() != data_counts.size()) {
    throw std::invalid_argument("intra_tier_aggregate: one data count per model required");
  }
  const double total = std::accumulate(data_counts.begin(), data_counts.end(), 0.0);
  std::vector<double> out(models.front().size(), 0.0);
  for (std::size_t u = 0; u < models.size(); ++u) {
    if (models[u].size() != out.size()) {
      throw std::invalid_argument("intra_tier_aggregate: model lengths differ");
    }
    const double share = data_counts[u] / total;
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += share * models[u][j];
    }
  }
  return out;
}

std::vector<double> masked_intra_tier_aggregate(std::span<const std::vector<double>> models,
                                                std::span<const pruning::PruningMask> masks,
                                                std::span<const double> data_counts,
                                                std::span<const double> base) {
  if (models.empty()) {
    throw std::invalid_argument("masked_intra_tier_aggregate: empty participation set");
  }
  if (models.size() != data_counts.size() || models.size() != masks.size()) {
    throw std::invalid_argument("masked_intra_tier_aggregate: one mask and count per model");
  }
  const std::size_t n = base.size();
  for (std::size_t u = 0; u < models.size(); ++u) {
    if (models[u].size() != n || masks[u].size() != n) {
      throw std::invalid_argument("masked_intra_tier_aggregate: length mismatch");
    }
  }
  const double total = std::accumulate(data_counts.begin(), data_counts.end(), 0.0);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double kept = 0.0;
    for (std::size_t u = 0; u < models.size(); ++u) {
      kept += masks[u].bits[j] != 0 ? data_counts[u] : 0.0;
    }
    if (kept == 0.0) {
      out[j] = base[j];
      continue;
    }
    // Dividing by `total` when nothing was pruned keeps this bit-identical to
    // the unmasked average.
    const double denom = kept == total ? total : kept;
    double sum = 0.0;
    for (std::size_t u = 0; u < models.size(); ++u) {
      if (masks[u].bits[j] != 0) {
        sum += data_counts[u] / denom * models[u][j];
      }
    }
    out[j] = sum;
  }
  return out;
}

std::vector<double> global_aggregate(int round,
                                     std::span<const std::optional<std::vector<double>>> tier_models,
                                     std::span<const double> previous_global,
                                     std::span<const double> alpha) {
  if (tier_models.size() != alpha.size()) {
    throw std::invalid_argument("global_aggregate: one weight per tier required");
  }
  for (std::size_t i = 0; i < tier_models.size(); ++i) {
    const bool due = participates(static_cast<int>(i + 1), round);
    if (due != tier_models[i].has_value()) {
      throw std::invalid_argument("global_aggregate: tier " + std::to_string(i + 1) +
                                  (due ? " participates but has no model"
                                       : " does not participate but has a model"));
    }
    if (due && tier_models[i]->size() != previous_global.size()) {
      throw std::invalid_argument("global_aggregate: model length mismatch");
    }
  }
  std::vector<double> out(previous_global.size(), 0.0);
  for (std::size_t i = 0; i < tier_models.size(); ++i) {
    const double a = alpha[i];
    if (a == 0.0) {
      continue;
    }
    const auto src = tier_models[i] ? std::span<const double>(*tier_models[i]) : previous_global;
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += a * src[j];
    }
  }
  return out;
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
  case Scheme::kTTPrune:
    return "tt_prune";
  case Scheme::kEqualResource:
    return "equal_resource";
  case Scheme::kFedAvg:
    return "fedavg";
  case Scheme::kNoPruning:
    return "no_pruning";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (auto s : {Scheme::kTTPrune, Scheme::kEqualResource, Scheme::kFedAvg, Scheme::kNoPruning}) {
    if (scheme_name(s) == name) {
      return s;
    }
  }
  throw ConfigError("unknown scheme '" + std::string(name) +
                    "' (expected tt_prune, equal_resource, fedavg or no_pruning)");
}

ExperimentResult run_experiment(Scheme scheme, const ExperimentSetup &s) {
  netmodel::validate(s.net);
  tinynn::validate(s.model);
  if (s.devices.empty() || s.devices.size() != s.shards.size()) {
    throw ConfigError("experiment: need one data shard per device");
  }
  if (s.rounds < 0 || s.local_epochs < 1) {
    throw ConfigError("experiment: rounds must be >= 0 and local epochs >= 1");
  }
  for (const auto &dev : s.devices) {
    netmodel::validate(dev, s.net);
  }

  const auto layout = tinynn::layout_of(s.model);
  const std::size_t n_dev = s.devices.size();
  const bool fedavg = scheme == Scheme::kFedAvg;

  ExperimentResult result;
  result.scheme = scheme;
  if (fedavg) {
    result.plan = assign_tiers(profile_round_times(s.devices, s.net, layout, s.local_epochs),
                               s.devices, std::numeric_limits<double>::max());
  } else if (s.plan) {
    result.plan = *s.plan;
  } else {
    result.plan = profile_and_assign(s.devices, s.net, layout, s.local_epochs);
  }
  const TierPlan &plan = result.plan;
  const int M = plan.tier_count;

  auto consts = s.consts;
  consts.tier_count = M;

  result.final_model = tinynn::init_model(s.model);
  result.initial = tinynn::loss_and_accuracy(s.model, result.final_model.values, s.eval_set);
  auto &global = result.final_model;

  // Model each tier last received, and the clock offsets of past closes.
  std::vector<std::vector<double>> received(static_cast<std::size_t>(M), global.values);
  std::vector<double> close_delay(static_cast<std::size_t>(s.rounds) + 1, 0.0);
  double fedavg_clock = 0.0;
  std::uint64_t cum_bits = 0;
  const double dt = s.net.delta_t_s;

  for (int k = 1; k <= s.rounds; ++k) {
    RoundMetrics rm;
    rm.round = k;

    std::vector<double> gains(n_dev);
    for (std::size_t d = 0; d < n_dev; ++d) {
      gains[d] = s.devices[d].channel_gain;
      if (s.net.fading) {
        Rng rng(derive_seed({s.seed, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(s.devices[d].id), kFadingStream}));
        gains[d] *= rng.exponential();
      }
    }

    std::vector<int> active; // participating, populated tiers
    std::size_t active_users = 0;
    for (int m = 1; m <= M; ++m) {
      if (participates(m, k) && !plan.members[static_cast<std::size_t>(m - 1)].empty()) {
        active.push_back(m);
        active_users += plan.members[static_cast<std::size_t>(m - 1)].size();
      }
    }

    std::vector<allocator::TierProfile> profiles;
    for (int m : active) {
      profiles.push_back(tier_profile(m, plan.members[static_cast<std::size_t>(m - 1)],
                                      s.devices, gains, s.net, layout));
    }

    // Tier-level decision.
    std::vector<TierRound> tier_rounds(active.size());
    if (scheme == Scheme::kTTPrune && !active.empty()) {
      const auto decision = allocator::solve_lambda(profiles, s.net, consts, s.local_epochs);
      for (std::size_t i = 0; i < active.size(); ++i) {
        tier_rounds[i].b_star = decision.tiers[i].bandwidth_fraction;
        tier_rounds[i].rho_star = decision.tiers[i].pruning_ratio;
        tier_rounds[i].lambda_star = decision.lambda_star;
      }
    } else {
      for (std::size_t i = 0; i < active.size(); ++i) {
        tier_rounds[i].b_star = static_cast<double>(profiles[i].user_count) /
                                static_cast<double>(active_users);
        if (scheme == Scheme::kEqualResource) {
          tier_rounds[i].rho_star = allocator::min_pruning_ratio(profiles[i], s.net,
                                                                 tier_rounds[i].b_star,
                                                                 s.local_epochs);
        }
      }
    }

    // Device-level ratios, latencies and upload set.
    const bool prunes = scheme == Scheme::kTTPrune || scheme == Scheme::kEqualResource;
    std::vector<TrainJob> jobs;
    double wait_until = 0.0; // NoPruning: latest upload completion, relative to k dT
    double slowest = 0.0;    // FedAvg round length
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int m = active[i];
      auto &tr = tier_rounds[i];
      tr.tier = m;
      tr.profile = profiles[i];
      const auto &members = plan.members[static_cast<std::size_t>(m - 1)];
      const double b_dev = tr.b_star / static_cast<double>(members.size());
      for (auto d : members) {
        const auto &dev = s.devices[d];
        DeviceRound dr;
        dr.device_id = dev.id;
        dr.tier = m;
        dr.bandwidth_fraction = b_dev;
        dr.channel_gain = gains[d];
        double ratio = 0.0;
        bool on_time = true;
        if (prunes) {
          try {
            const double own = allocator::min_pruning_ratio(device_profile(m, dev, gains[d], layout),
                                                            s.net, b_dev, s.local_epochs);
            ratio = quantize_ratio_up(std::max(tr.rho_star, own), layout.fc_weight_count);
          } catch (const InfeasibleError &) {
            on_time = false;
            ratio = 1.0;
          }
        }
        Device faded = dev;
        faded.channel_gain = gains[d];
        dr.pruning_ratio = ratio;
        const std::size_t kept = pruning::pruned_weight_count(layout, ratio);
        dr.latency_s =
            kept == 0 ? 0.0
                      : netmodel::round_latency(s.net, faded, kept, s.local_epochs, b_dev).total_s;
        if (prunes) {
          on_time = on_time && netmodel::meets_deadline({0.0, 0.0, dr.latency_s}, m, dt);
        } else if (scheme == Scheme::kNoPruning &&
                   !netmodel::meets_deadline({0.0, 0.0, dr.latency_s}, m, dt)) {
          const double start = static_cast<double>(k - m) * dt +
                               close_delay[static_cast<std::size_t>(k - m)];
          wait_until = std::max(wait_until, start + dr.latency_s - static_cast<double>(k) * dt);
        }
        slowest = std::max(slowest, dr.latency_s);
        dr.uploaded = on_time;
        if (on_time) {
          dr.weights_sent = kept;
          ++tr.uploads;
          tr.latency_s = std::max(tr.latency_s, dr.latency_s);
          cum_bits += static_cast<std::uint64_t>(s.net.quant_bits) * dr.weights_sent;
          jobs.push_back({d, m, ratio});
        } else {
          ++tr.dropped;
        }
        rm.devices.push_back(dr);
      }
    }

    const auto results = train_all(s, received, layout, jobs, k);

    // Intra-tier then global aggregation.
    std::vector<std::optional<std::vector<double>>> tier_models(static_cast<std::size_t>(M));
    for (int m = 1; m <= M; ++m) {
      if (!participates(m, k)) {
        continue;
      }
      std::vector<std::vector<double>> models;
      std::vector<pruning::PruningMask> masks;
      std::vector<double> counts;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].tier == m) {
          models.push_back(results[j].weights);
          masks.push_back(results[j].mask);
          counts.push_back(static_cast<double>(s.devices[jobs[j].device].data_count));
        }
      }
      // A tier with no upload contributes the previous global model.
      tier_models[static_cast<std::size_t>(m - 1)] =
          models.empty() ? global.values
                         : masked_intra_tier_aggregate(models, masks, counts,
                                                       received[static_cast<std::size_t>(m - 1)]);
    }
    const auto alpha = aggregation_weights(k, M).values();
    global.values = global_aggregate(k, tier_models, global.values, alpha);
    for (int m = 1; m <= M; ++m) {
      if (participates(m, k)) {
        received[static_cast<std::size_t>(m - 1)] = global.values;
      }
    }

    const auto eval = tinynn::loss_and_accuracy(s.model, global.values, s.eval_set);
    rm.loss = eval.loss;
    rm.accuracy = eval.accuracy;
    if (fedavg) {
      fedavg_clock += slowest;
      rm.cum_time_s = fedavg_clock;
    } else {
      close_delay[static_cast<std::size_t>(k)] =
          std::max(close_delay[static_cast<std::size_t>(k - 1)], wait_until);
      rm.cum_time_s = static_cast<double>(k) * dt + close_delay[static_cast<std::size_t>(k)];
    }
    rm.cum_uplink_bits = cum_bits;
    rm.tiers = std::move(tier_rounds);

    if (!s.checkpoint_dir.empty()) {
      write_checkpoint(s.checkpoint_dir / scheme_name(scheme), k, global, jobs, results,
                       s.devices);
    }
    result.rounds.push_back(std::move(rm));
  }
  return result;
}

std::string format_metrics_csv(Scheme scheme, std::span<const RoundMetrics> rounds) {
  std::string out(kMetricsHeader);
  out += '\n';
  const auto name = scheme_name(scheme);
  for (const auto &r : rounds) {
    for (const auto &t : r.tiers) {
      out += std::to_string(r.round) + ',' + std::to_string(t.tier) + ',' + std::string(name) +
             ',' + format_g17(t.b_star) + ',' + format_g17(t.rho_star) + ',' +
             format_g17(t.lambda_star) + ',' + format_g17(t.latency_s) + ',' +
             format_g17(r.loss) + ',' + format_g17(r.accuracy) + ',' +
             format_g17(r.cum_time_s) + ',' + std::to_string(r.cum_uplink_bits) + '\n';
    }
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    lines.push_back(line);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
  if (lines.empty() || lines.front() != kMetricsHeader) {
    throw FormatError("metrics csv: unexpected header");
  }
  std::vector<MetricsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::string_view rest = lines[i];
    while (true) {
      const auto c = rest.find(',');
      f.emplace_back(rest.substr(0, c));
      if (c == std::string_view::npos) {
        break;
      }
      rest = rest.substr(c + 1);
    }
    if (f.size() != 11) {
      throw FormatError("metrics csv: line " + std::to_string(i + 1) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    auto real = [&](const std::string &v) {
      char *end = nullptr;
      const double x = std::strtod(v.c_str(), &end);
      if (v.empty() || end != v.c_str() + v.size()) {
        throw FormatError("metrics csv: bad number '" + v + "' on line " + std::to_string(i + 1));
      }
      return x;
    };
    auto integer = [&](const std::string &v, auto &dst) {
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), dst);
      if (ec != std::errc{} || p != v.data() + v.size()) {
        throw FormatError("metrics csv: bad integer '" + v + "' on line " +
                          std::to_string(i + 1));
      }
    };
    MetricsRow row;
    integer(f[0], row.round);
    integer(f[1], row.tier);
    row.scheme = f[2];
    row.b_star = real(f[3]);
    row.rho_star = real(f[4]);
    row.lambda_star = real(f[5]);
    row.latency_s = real(f[6]);
    row.loss = real(f[7]);
    row.accuracy = real(f[8]);
    row.cum_time_s = real(f[9]);
    integer(f[10], row.cum_uplink_bits);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<std::size_t> first_round_reaching(std::span<const RoundMetrics> rounds,
                                                double target) {
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (rounds[i].accuracy >= target) {
      return i;
    }
  }
  return std::nullopt;
}

} // namespace ttprune::fedsim
