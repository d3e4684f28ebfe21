#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "learn2mix/errors.hpp"
#include "learn2mix/experiment.hpp"
#include "learn2mix/mix.hpp"
#include "learn2mix/sampler.hpp"
#include "learn2mix/theory.hpp"

namespace py = pybind11;
using namespace l2m;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(learn2mix, m) {
  m.doc() = "Adaptive batch composition training (learn2mix) and its baselines";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  py::class_<ClassPartitionedDataset>(m, "Dataset")
      .def_property_readonly("num_classes", &ClassPartitionedDataset::num_classes)
      .def_property_readonly("size", &ClassPartitionedDataset::size)
      .def_property_readonly("feature_dim", &ClassPartitionedDataset::feature_dim)
      .def_property_readonly("fixed_proportions", &ClassPartitionedDataset::fixed_proportions)
      .def("class_sizes", &ClassPartitionedDataset::class_sizes)
      .def("write_csv", [](const ClassPartitionedDataset& ds, const std::filesystem::path& p) { write_csv(ds, p); });

  m.def(
      "make_mean_estimation",
      [](std::uint64_t seed) { return make_mean_estimation(seed); }, py::arg("seed"),
      "Returns (train, test) for the four-class mean regression task.");

  m.def(
      "update_mixing",
      [](std::vector<double> alpha, std::vector<double> losses, double gamma) {
        auto state = MixingState::initial(std::move(alpha), gamma);
        return update_mixing(state, ClassLossVector::all_valid(std::move(losses))).alpha;
      },
      py::arg("alpha"), py::arg("losses"), py::arg("gamma"));

  m.def(
      "allocate_counts", [](std::vector<double> alpha, std::size_t m) { return allocate_counts(alpha, m).counts; },
      py::arg("alpha"), py::arg("batch_size"));

  py::class_<CyclicCursor>(m, "CyclicCursor")
      .def(py::init<std::vector<std::size_t>>(), py::arg("class_sizes"))
      .def("begin_epoch", &CyclicCursor::begin_epoch, py::arg("seed"))
      .def(
          "next_batch",
          [](CyclicCursor& c, std::vector<std::size_t> counts) {
            std::size_t total = 0;
            for (auto n : counts) total += n;
            std::vector<std::pair<std::size_t, std::size_t>> out;
            for (const auto& r : c.next_batch({std::move(counts), total})) out.emplace_back(r.class_id, r.index);
            return out;
          },
          py::arg("counts"))
      .def_property_readonly("offsets", &CyclicCursor::offsets)
      .def_property_readonly("epoch", &CyclicCursor::epoch);

  m.def(
      "verify_theory", [](std::uint64_t seed) { return to_python(to_json(verify_theory(seed))); },
      py::arg("seed") = 0, "Runs the convex certification harness and returns its report as a dict.");

  m.def(
      "default_config",
      [](const std::string& task) {
        const auto t = parse_task(task);
        if (!t) throw UsageError("unknown task '" + task + "'");
        return to_python(to_json(default_spec(*t)));
      },
      py::arg("task") = "mean-estimation");

  m.def(
      "run",
      [](const py::dict& config) {
        const auto j = from_python(config);
        auto task = Task::mean_estimation;
        if (j.contains("task")) {
          const auto t = parse_task(j.at("task").get<std::string>());
          if (!t) throw UsageError("unknown task");
          task = *t;
        }
        const auto spec = apply_json(j, default_spec(task));
        std::vector<std::filesystem::path> files;
        {
          py::gil_scoped_release release;
          for (const auto& o : run(spec)) files.push_back(o.metrics);
        }
        return files;
      },
      py::arg("config"), "Runs a strategy x seed grid described by a config dict; returns the metrics files.");

  m.def(
      "summarize",
      [](const std::vector<std::filesystem::path>& files, std::size_t epochs) {
        py::list rows;
        for (const auto& r : summarize(files, epochs)) {
          py::dict d;
          d["strategy"] = r.strategy;
          d["metric"] = r.metric;
          d["epoch"] = r.epoch;
          d["n"] = r.count;
          d["mean"] = r.mean;
          d["std"] = r.stddev ? py::cast(*r.stddev) : py::none();
          rows.append(d);
        }
        return rows;
      },
      py::arg("files"), py::arg("epochs") = 0);
}
