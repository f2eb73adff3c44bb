#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "optree/harness.hpp"

namespace py = pybind11;
using namespace optree;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::array_t<double> to_array(std::span<const double> v) { return py::array_t<double>(v.size(), v.data()); }

py::list node_list(const std::vector<NodeIndex>& nodes) {
  py::list out;
  for (const auto& n : nodes) out.append(py::make_tuple(n.level, n.pos));
  return out;
}

std::vector<DyadicHistogram> draws_for(const FittedPosterior& fp, std::size_t count, std::uint64_t seed) {
  return sample_posterior_densities(fp, count, derive_seed(seed, kCalibrationStream));
}

FittedPosterior fit_samples(const std::vector<double>& data, double gamma_split, double beta_a,
                            std::optional<int> flat_level, std::optional<int> max_depth) {
  const ResolvedPrior prior =
      resolve_prior(PriorConfig{gamma_split, beta_a, flat_level, max_depth}, static_cast<std::int64_t>(data.size()));
  if (prior.depth_clamped) {
    const std::string message = "default max depth is below the flat level for this n; using " +
                                std::to_string(prior.params.max_depth);
    if (PyErr_WarnEx(PyExc_RuntimeWarning, message.c_str(), 1) < 0) throw py::error_already_set();
  }
  py::gil_scoped_release release;
  return fit_data(data, prior);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optional Polya tree density estimation on [0,1)";

  py::class_<DyadicHistogram>(m, "Histogram")
      .def(py::init<>())
      .def_static("from_grid",
                  [](int depth, const std::vector<double>& heights) { return DyadicHistogram::from_grid(depth, heights); })
      .def_property_readonly("depth", &DyadicHistogram::depth)
      .def_property_readonly("total_mass", &DyadicHistogram::total_mass)
      .def_property_readonly("cells",
                             [](const DyadicHistogram& h) {
                               py::list out;
                               for (const auto& c : h.cells()) {
                                 const Interval iv = interval_of(c.node);
                                 out.append(py::make_tuple(iv.left, iv.right, c.height));
                               }
                               return out;
                             })
      .def("__call__", [](const DyadicHistogram& h, double x) { return h(x); })
      .def("evaluate",
           [](const DyadicHistogram& h, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
             py::array_t<double> out(x.request().shape);
             const double* in = x.data();
             double* dst = out.mutable_data();
             for (py::ssize_t i = 0; i < x.size(); ++i) dst[i] = h(in[i]);
             return out;
           })
      .def("grid_heights", [](const DyadicHistogram& h, int depth) { return to_array(h.grid_heights(depth)); })
      .def("cdf",
           [](const DyadicHistogram& h) {
             const auto cdf = cdf_of(h);
             return py::make_tuple(to_array(cdf.breaks()), to_array(cdf.values()));
           })
      .def("sup_distance", [](const DyadicHistogram& a, const DyadicHistogram& b) { return sup_distance(a, b); })
      .def("__eq__", [](const DyadicHistogram& a, const DyadicHistogram& b) { return a == b; })
      .def("__len__", [](const DyadicHistogram& h) { return h.cells().size(); })
      .def("__repr__", [](const DyadicHistogram& h) {
        return "<Histogram cells=" + std::to_string(h.cells().size()) + " depth=" + std::to_string(h.depth()) + ">";
      });

  py::class_<FittedPosterior>(m, "Model")
      .def_property_readonly("n", &FittedPosterior::n)
      .def_property_readonly("max_depth", &FittedPosterior::max_depth)
      .def_property_readonly("flat_level", [](const FittedPosterior& fp) { return fp.prior().flat_level; })
      .def_property_readonly("gamma_split", [](const FittedPosterior& fp) { return fp.prior().gamma; })
      .def_property_readonly("beta_a", &FittedPosterior::beta_a)
      .def("split_probability",
           [](const FittedPosterior& fp, int l, std::int64_t k) { return fp.split_probability(make_node(l, k)); })
      .def("interior_probability",
           [](const FittedPosterior& fp, int l, std::int64_t k) { return node_interior_marginal(fp, make_node(l, k)); })
      .def("odds_identity_residual", &odds_identity_residual)
      .def("median_tree", [](const FittedPosterior& fp) { return node_list(median_tree(fp).tree.nodes()); })
      .def("estimate",
           [](const FittedPosterior& fp) { return median_density(median_tree(fp), fp.counts(), fp.n()); })
      .def(
          "sample_tree",
          [](const FittedPosterior& fp, std::uint64_t seed) {
            Rng rng = make_rng(seed, kCalibrationStream);
            return node_list(sample_posterior_tree(fp, rng).nodes());
          },
          py::arg("seed") = kDefaultSeed)
      .def(
          "sample_densities",
          [](const FittedPosterior& fp, std::size_t count, std::uint64_t seed) {
            py::gil_scoped_release release;
            return draws_for(fp, count, seed);
          },
          py::arg("count"), py::arg("seed") = kDefaultSeed)
      .def("to_json", [](const FittedPosterior& fp) { return to_json(fp).dump(); })
      .def_static("from_json", [](const std::string& text) { return posterior_from_json(nlohmann::json::parse(text)); });

  m.def(
      "truth_density",
      [](const std::string& kind, std::uint64_t truth_seed, int resolution) {
        return make_truth({parse_truth_kind(kind), truth_seed, resolution}).density;
      },
      py::arg("kind") = "triangular", py::arg("truth_seed") = 1, py::arg("resolution") = 12);

  m.def(
      "simulate",
      [](const std::string& kind, std::size_t n, std::uint64_t seed, std::uint64_t truth_seed, int resolution) {
        const Truth truth = make_truth({parse_truth_kind(kind), truth_seed, resolution});
        Rng rng = make_rng(seed, kDataStream);
        return to_array(sample_truth(truth, n, rng));
      },
      py::arg("truth") = "triangular", py::arg("n") = 10000, py::arg("seed") = kDefaultSeed,
      py::arg("truth_seed") = 1, py::arg("resolution") = 12);

  m.def("fit", &fit_samples, py::arg("data"), py::arg("gamma_split") = 1.1, py::arg("beta_a") = 1.0,
        py::arg("flat_level") = py::none(), py::arg("max_depth") = py::none());

  m.def(
      "band",
      [](const FittedPosterior& fp, const std::string& kind, double level, std::size_t draws, std::uint64_t seed,
         double vn_exponent, double w_delta) {
        const MedianTree mt = median_tree(fp);
        py::dict out;
        if (kind == "simple") {
          const SupNormBand b = band_simple(fp, mt, vn_exponent);
          out["center"] = b.center();
          out["radius"] = b.radius();
        } else if (kind == "multiscale") {
          std::vector<DyadicHistogram> samples;
          {
            py::gil_scoped_release release;
            samples = draws_for(fp, draws, seed);
          }
          const MultiscaleBand b = band_multiscale(fp, mt, level, MultiscaleWeights{w_delta}, vn_exponent, samples);
          out["center"] = b.simple().center();
          out["radius"] = b.simple().radius();
          out["scaled_radius"] = b.ball().scaled_radius();
          out["credibility"] = credibility(b, std::span<const DyadicHistogram>(samples));
          out["summary"] = to_python(multiscale_summary(b));
        } else {
          throw py::value_error("kind must be 'simple' or 'multiscale'");
        }
        return out;
      },
      py::arg("model"), py::arg("kind") = "simple", py::arg("level") = 0.05, py::arg("draws") = 10000,
      py::arg("seed") = kDefaultSeed, py::arg("vn_exponent") = kDefaultVnExponent,
      py::arg("w_delta") = kDefaultWeightDelta);

  m.def(
      "cdf_band",
      [](const FittedPosterior& fp, double level, std::size_t draws, std::uint64_t seed) {
        std::vector<DyadicHistogram> samples;
        {
          py::gil_scoped_release release;
          samples = draws_for(fp, draws, seed);
        }
        const CdfBand b = cdf_band(fp, median_tree(fp), level, samples);
        py::dict out;
        out["t"] = to_array(b.center().breaks());
        out["F"] = to_array(b.center().values());
        out["radius"] = b.radius();
        return out;
      },
      py::arg("model"), py::arg("level") = 0.05, py::arg("draws") = 10000, py::arg("seed") = kDefaultSeed);

  m.def(
      "run_pipeline",
      [](const py::object& config, const std::optional<std::string>& out_dir) {
        const ExperimentConfig c = config.is_none() ? ExperimentConfig{} : config_from_json(from_python(config));
        std::optional<PipelineResult> result;
        {
          py::gil_scoped_release release;
          result.emplace(run_pipeline(c));
          if (out_dir) write_pipeline(*result, *out_dir);
        }
        return to_python(result->manifest);
      },
      py::arg("config") = py::none(), py::arg("out_dir") = py::none());

  m.def(
      "reproduce_table1",
      [](std::int64_t n, std::size_t draws, std::uint64_t seed, const std::vector<double>& levels) {
        ExperimentConfig c;
        c.n = n;
        c.draws = draws;
        c.seed = seed;
        nlohmann::json j;
        {
          py::gil_scoped_release release;
          j = to_json(reproduce_table1(c, levels));
        }
        return to_python(j);
      },
      py::arg("n") = 10000, py::arg("draws") = 10000, py::arg("seed") = kDefaultSeed,
      py::arg("levels") = std::vector<double>{0.01, 0.05, 0.1, 0.15});

  m.def(
      "rate_study",
      [](const std::string& truth, const std::vector<std::int64_t>& ns, std::size_t reps, std::uint64_t seed,
         std::uint64_t truth_seed) {
        RateStudy s;
        const TruthSpec spec{parse_truth_kind(truth), truth_seed, 12};
        {
          py::gil_scoped_release release;
          s = rate_study(spec, ns, reps, seed);
        }
        py::dict out;
        std::vector<double> n, err, depth;
        for (const auto& r : s.rows) {
          n.push_back(static_cast<double>(r.n));
          err.push_back(r.median_error);
          depth.push_back(r.median_depth);
        }
        out["n"] = to_array(n);
        out["median_sup_error"] = to_array(err);
        out["median_depth"] = to_array(depth);
        out["slope"] = s.slope;
        return out;
      },
      py::arg("truth") = "triangular", py::arg("ns") = std::vector<std::int64_t>{1024, 4096, 16384, 65536},
      py::arg("reps") = 20, py::arg("seed") = kDefaultSeed, py::arg("truth_seed") = 1);
}
