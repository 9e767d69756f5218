// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/allocator.hpp"
#include "ttprune/config.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/fedsim.hpp"
#include "ttprune/netmodel.hpp"
#include "ttprune/pruning.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace ttprune;

PYBIND11_MODULE(_ttprune, m) {
  m.doc() = "Time-triggered federated learning with joint pruning and bandwidth allocation";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  auto io = py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", io.ptr());

  py::class_<netmodel::NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("bandwidth_total_hz", &netmodel::NetworkConfig::bandwidth_total_hz)
      .def_readwrite("tx_power_w", &netmodel::NetworkConfig::tx_power_w)
      .def_readwrite("noise_density_w_per_hz", &netmodel::NetworkConfig::noise_density_w_per_hz)
      .def_readwrite("quant_bits", &netmodel::NetworkConfig::quant_bits)
      .def_readwrite("cell_radius_m", &netmodel::NetworkConfig::cell_radius_m)
      .def_readwrite("delta_t_s", &netmodel::NetworkConfig::delta_t_s)
      .def_readwrite("fading", &netmodel::NetworkConfig::fading);

  m.def("dbm_to_watts", &netmodel::dbm_to_watts);
  m.def("path_gain", &netmodel::path_gain, py::arg("cfg"), py::arg("distance_m"));
  m.def("uplink_rate", &netmodel::uplink_rate, py::arg("cfg"), py::arg("gain"),
        py::arg("bandwidth_fraction"));

  py::class_<pruning::LayerLayout>(m, "LayerLayout")
      .def(py::init<>())
      .def(py::init([](std::size_t conv, std::size_t fc) {
             return pruning::LayerLayout{conv, fc};
           }),
           py::arg("conv_weight_count"), py::arg("fc_weight_count"))
      .def_readwrite("conv_weight_count", &pruning::LayerLayout::conv_weight_count)
      .def_readwrite("fc_weight_count", &pruning::LayerLayout::fc_weight_count)
      .def("total", &pruning::LayerLayout::total);

  m.def(
      "build_mask",
      [](const std::vector<double> &scores, const pruning::LayerLayout &layout, double ratio) {
        return pruning::build_mask(scores, layout, ratio).bits;
      },
      py::arg("scores"), py::arg("layout"), py::arg("ratio"),
      "Mask bits (1 = kept) pruning the lowest-scoring FC weights.");
  m.def("pruned_weight_count", &pruning::pruned_weight_count, py::arg("layout"), py::arg("ratio"));

  py::class_<allocator::TierProfile>(m, "TierProfile")
      .def(py::init<>())
      .def_readwrite("tier_index", &allocator::TierProfile::tier_index)
      .def_readwrite("user_count", &allocator::TierProfile::user_count)
      .def_readwrite("data_count", &allocator::TierProfile::data_count)
      .def_readwrite("avg_cycles_per_weight", &allocator::TierProfile::avg_cycles_per_weight)
      .def_readwrite("avg_cpu_freq_hz", &allocator::TierProfile::avg_cpu_freq_hz)
      .def_readwrite("avg_gain", &allocator::TierProfile::avg_gain)
      .def_readwrite("layout", &allocator::TierProfile::layout)
      .def_readwrite("band_sharers", &allocator::TierProfile::band_sharers);

  py::class_<allocator::BoundConstants>(m, "BoundConstants")
      .def(py::init<>())
      .def_readwrite("lipschitz", &allocator::BoundConstants::lipschitz)
      .def_readwrite("delta", &allocator::BoundConstants::delta)
      .def_readwrite("epsilon", &allocator::BoundConstants::epsilon)
      .def_readwrite("phi", &allocator::BoundConstants::phi)
      .def_readwrite("noise_scale", &allocator::BoundConstants::noise_scale)
      .def_readwrite("xi", &allocator::BoundConstants::xi)
      .def_readwrite("tier_count", &allocator::BoundConstants::tier_count);

  m.def("min_pruning_ratio", &allocator::min_pruning_ratio, py::arg("tier"), py::arg("cfg"),
        py::arg("bandwidth_fraction"), py::arg("local_epochs"));
  m.def(
      "solve_lambda",
      [](const std::vector<allocator::TierProfile> &tiers, const netmodel::NetworkConfig &cfg,
         const allocator::BoundConstants &consts, int local_epochs) {
        const auto d = allocator::solve_lambda(tiers, cfg, consts, local_epochs);
        py::dict out;
        std::vector<double> b;
        std::vector<double> rho;
        for (const auto &t : d.tiers) {
          b.push_back(t.bandwidth_fraction);
          rho.push_back(t.pruning_ratio);
        }
        out["lambda_star"] = d.lambda_star;
        out["objective"] = d.objective_value;
        out["b"] = b;
        out["rho"] = rho;
        return out;
      },
      py::arg("tiers"), py::arg("cfg"), py::arg("consts"), py::arg("local_epochs"),
      "Bandwidth fractions and pruning ratios per tier.");

  m.def(
      "aggregation_weights",
      [](int round, int tier_count) { return fedsim::aggregation_weights(round, tier_count).values(); },
      py::arg("round"), py::arg("tier_count"));

  m.def(
      "run",
      [](const std::string &config_json, const std::string &scheme) {
        const auto cfg = config::parse_config(config_json);
        const auto s = fedsim::parse_scheme(scheme);
        std::string csv;
        {
          py::gil_scoped_release release;
          const auto setup = config::prepare_experiment(cfg);
          csv = fedsim::format_metrics_csv(s, fedsim::run_experiment(s, setup).rounds);
        }
        return csv;
      },
      py::arg("config_json"), py::arg("scheme") = "tt_prune",
      "Runs one scheme from a JSON config string and returns the metrics CSV.");
}
