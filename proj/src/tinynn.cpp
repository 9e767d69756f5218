// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/tinynn.hpp"

#include "ttprune/detail/bytes.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ttprune::tinynn {

namespace {

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0; // start of the weight matrix; bias follows it

  [[nodiscard]] std::size_t bias_offset() const { return offset + in * out; }
  [[nodiscard]] std::size_t param_count() const { return in * out + out; }
};

std::vector<LayerShape> shapes_of(const ModelSpec &spec) {
  std::vector<std::size_t> sizes{spec.input_dim};
  if (spec.conv_width > 0) {
    sizes.push_back(spec.conv_width);
  }
  sizes.insert(sizes.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  sizes.push_back(spec.output_dim);

  std::vector<LayerShape> shapes;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    LayerShape s{sizes[l], sizes[l + 1], offset};
    offset += s.param_count();
    shapes.push_back(s);
  }
  return shapes;
}

/// Scratch buffers for one sample's forward/backward pass.
class Workspace {
public:
  explicit Workspace(const std::vector<LayerShape> &shapes) : shapes_(shapes) {
    acts_.resize(shapes.size() + 1);
    acts_[0].resize(shapes.front().in);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      acts_[l + 1].resize(shapes[l].out);
    }
    delta_.resize(acts_.size());
    for (std::size_t l = 0; l < acts_.size(); ++l) {
      delta_[l].resize(acts_[l].size());
    }
  }

  /// Returns logits (post last layer, no activation).
  const std::vector<double> &forward(std::span<const double> w, std::span<const double> x) {
    std::copy(x.begin(), x.end(), acts_[0].begin());
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      const auto &s = shapes_[l];
      const bool last = l + 1 == shapes_.size();
      const auto &a = acts_[l];
      auto &z = acts_[l + 1];
      for (std::size_t o = 0; o < s.out; ++o) {
        const double *row = w.data() + s.offset + o * s.in;
        double sum = w[s.bias_offset() + o];
        for (std::size_t i = 0; i < s.in; ++i) {
          sum += row[i] * a[i];
        }
        z[o] = last ? sum : std::max(sum, 0.0);
      }
    }
    return acts_.back();
  }

  /// Cross-entropy of the last forward pass; accumulates scale * dLoss/dw.
  double backward(std::span<const double> w, int label, double scale, std::span<double> grad) {
    const auto &logits = acts_.back();
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) {
      denom += std::exp(z - max_logit);
    }
    const double log_denom = std::log(denom) + max_logit;
    const double loss = log_denom - logits[static_cast<std::size_t>(label)];

    auto &d_out = delta_.back();
    for (std::size_t o = 0; o < logits.size(); ++o) {
      d_out[o] = std::exp(logits[o] - log_denom);
    }
    d_out[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = shapes_.size(); l-- > 0;) {
      const auto &s = shapes_[l];
      const auto &a = acts_[l];
      const auto &d = delta_[l + 1];
      for (std::size_t o = 0; o < s.out; ++o) {
        const double g = scale * d[o];
        if (g == 0.0) {
          continue;
        }
        double *grow = grad.data() + s.offset + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) {
          grow[i] += g * a[i];
        }
        grad[s.bias_offset() + o] += g;
      }
      if (l == 0) {
        break;
      }
      // Back through ReLU of layer l-1 (acts_[l] holds its rectified output).
      auto &d_prev = delta_[l];
      std::fill(d_prev.begin(), d_prev.end(), 0.0);
      for (std::size_t o = 0; o < s.out; ++o) {
        if (d[o] == 0.0) {
          continue;
        }
        const double *row = w.data() + s.offset + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) {
          d_prev[i] += row[i] * d[o];
        }
      }
      for (std::size_t i = 0; i < s.in; ++i) {
        if (!(a[i] > 0.0)) {
          d_prev[i] = 0.0;
        }
      }
    }
    return loss;
  }

private:
  const std::vector<LayerShape> &shapes_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> delta_;
};

void check_weights(const ModelSpec &spec, std::span<const double> w) {
  if (w.size() != layout_of(spec).total()) {
    throw std::invalid_argument("tinynn: weight vector does not match the model spec");
  }
}

} // namespace

void validate(const ModelSpec &spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw ConfigError("model: input and output dimensions must be >= 1");
  }
  for (auto h : spec.hidden_dims) {
    if (h < 1) {
      throw ConfigError("model: hidden dimensions must be >= 1");
    }
  }
}

pruning::LayerLayout layout_of(const ModelSpec &spec) {
  const auto shapes = shapes_of(spec);
  pruning::LayerLayout layout;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (l == 0 && spec.conv_width > 0) {
      layout.conv_weight_count += shapes[l].param_count();
    } else {
      layout.fc_weight_count += shapes[l].param_count();
    }
  }
  return layout;
}

WeightVector init_model(const ModelSpec &spec) {
  validate(spec);
  WeightVector w;
  w.layout = layout_of(spec);
  w.values.assign(w.layout.total(), 0.0);
  Rng rng(derive_seed({spec.seed, 0x1417ULL}));
  for (const auto &s : shapes_of(spec)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (std::size_t k = 0; k < s.in * s.out; ++k) {
      w.values[s.offset + k] = scale * rng.normal();
    }
  }
  return w;
}

double loss_and_gradient(const ModelSpec &spec, std::span<const double> weights,
                         const data::LabeledDataset &data, std::span<const std::size_t> rows,
                         std::span<double> grad) {
  check_weights(spec, weights);
  if (grad.size() != weights.size()) {
    throw std::invalid_argument("loss_and_gradient: gradient buffer size mismatch");
  }
  if (rows.empty()) {
    throw std::invalid_argument("loss_and_gradient: empty batch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto shapes = shapes_of(spec);
  Workspace ws(shapes);
  const double scale = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (auto r : rows) {
    ws.forward(weights, data.row(r));
    loss += ws.backward(weights, data.labels[r], scale, grad);
  }
  return loss * scale;
}

double loss_and_gradient(const ModelSpec &spec, std::span<const double> weights,
                         const data::LabeledDataset &data, std::span<double> grad) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return loss_and_gradient(spec, weights, data, rows, grad);
}

Evaluation loss_and_accuracy(const ModelSpec &spec, std::span<const double> weights,
                             const data::LabeledDataset &data) {
  check_weights(spec, weights);
  if (data.size() == 0) {
    throw std::invalid_argument("loss_and_accuracy: empty dataset");
  }
  const auto shapes = shapes_of(spec);
  Workspace ws(shapes);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto &logits = ws.forward(weights, data.row(r));
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) {
      denom += std::exp(z - max_logit);
    }
    const auto label = static_cast<std::size_t>(data.labels[r]);
    loss += std::log(denom) + max_logit - logits[label];
    const auto argmax = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    correct += argmax == label ? 1 : 0;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

std::vector<std::size_t> epoch_order(std::size_t rows, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(epoch)}));
  rng.shuffle(std::span(order));
  return order;
}

WeightVector local_update(const ModelSpec &spec, const WeightVector &w,
                          const pruning::PruningMask &mask, const data::LabeledDataset &shard,
                          const LocalTrainParams &params) {
  if (shard.size() == 0) {
    throw std::invalid_argument("local_update: empty shard");
  }
  if (params.batch_size < 1) {
    throw std::invalid_argument("local_update: batch size must be >= 1");
  }
  check_weights(spec, w.values);
  WeightVector out = w;
  pruning::apply_mask_inplace(out.values, mask);

  // Slots that never move: pruned ones and the frozen segment.
  std::vector<std::uint8_t> trainable = mask.bits;
  std::fill(trainable.begin(),
            trainable.begin() + static_cast<std::ptrdiff_t>(out.layout.conv_weight_count), 0);

  std::vector<double> grad(out.values.size());
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto order = epoch_order(shard.size(), params.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t len = std::min(params.batch_size, order.size() - start);
      loss_and_gradient(spec, out.values, shard, std::span(order).subspan(start, len), grad);
      for (std::size_t j = 0; j < grad.size(); ++j) {
        if (trainable[j] != 0) {
          out.values[j] -= params.learning_rate * grad[j];
        }
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> serialize_weights(const WeightVector &w) {
  std::vector<std::uint8_t> out{'T', 'T', 'P', 'W'};
  detail::put_u32_le(out, kWeightsFormatVersion);
  detail::put_u64_le(out, w.values.size());
  detail::put_u64_le(out, w.layout.conv_weight_count);
  for (double v : w.values) {
    detail::put_f64_le(out, v);
  }
  return out;
}

WeightVector deserialize_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), "TTPW")) {
    throw FormatError("weights checkpoint: bad magic");
  }
  const auto version = in.u32_le();
  if (version != kWeightsFormatVersion) {
    throw FormatError("weights checkpoint: unsupported version " + std::to_string(version));
  }
  const auto n = in.u64_le();
  const auto conv = in.u64_le();
  if (conv > n) {
    throw FormatError("weights checkpoint: conv segment longer than the vector");
  }
  if (in.remaining() != n * 8) {
    throw FormatError("weights checkpoint: payload length does not match header");
  }
  WeightVector w;
  w.layout = {static_cast<std::size_t>(conv), static_cast<std::size_t>(n - conv)};
  w.values.resize(static_cast<std::size_t>(n));
  for (auto &v : w.values) {
    v = in.f64_le();
  }
  return w;
}

} // namespace ttprune::tinynn
