// Python module exposing the balanced-parentheses tree, the concurrency
// engine and the benchmark runner. Engine operations release the GIL so
// Python threads can drive the tree concurrently.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <rmmt/bench.hpp>
#include <rmmt/engine.hpp>
#include <rmmt/ingest.hpp>
#include <rmmt/tree.hpp>

#include <cstdint>
#include <memory>
#include <string>

namespace py = pybind11;
using namespace rmmt;

namespace {

std::unique_ptr<Tree> make_tree(const std::string& bp, double leaf_fill, std::uint32_t leaf_cap) {
  TreeParams params;
  params.leaf_cap = leaf_cap;
  return std::make_unique<Tree>(ParenSeq::from_string(bp), leaf_fill, params);
}

py::dict stats_dict(const TxnStats& s) {
  py::dict d;
  d["attempts"] = s.attempts;
  d["fast_commits"] = s.fast_commits;
  d["fallback_commits"] = s.fallback_commits;
  d["aborts"] = s.aborts;
  d["reads_done"] = s.reads_done;
  d["writes_done"] = s.writes_done;
  return d;
}

py::dict record_dict(const BenchRecord& r) {
  py::dict d;
  d["mode"] = r.mode;
  d["threads"] = r.threads;
  d["duration_s"] = r.duration_s;
  d["write_pct"] = r.write_pct;
  d["retries"] = r.retries;
  d["rep"] = r.rep;
  d["ops_total"] = r.ops_total;
  d["ops_read"] = r.ops_read;
  d["ops_write"] = r.ops_write;
  d["fast_commits"] = r.fast_commits;
  d["fallback_commits"] = r.fallback_commits;
  d["aborts"] = r.aborts;
  d["throughput_ops_s"] = r.throughput_ops_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(pyrmmt, m) {
  m.doc() = "Concurrent range min-max tree over balanced parentheses";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationFailure>(m, "ValidationFailure");

  py::class_<Tree>(m, "Tree")
      .def(py::init(&make_tree), py::arg("bp") = "", py::arg("leaf_fill") = 0.75,
           py::arg("leaf_cap") = 320)
      .def_static(
          "from_file",
          [](const std::string& path, double leaf_fill) {
            TreeParams params;
            return std::make_unique<Tree>(ingest::load_path(path).seq, leaf_fill, params);
          },
          py::arg("path"), py::arg("leaf_fill") = 0.75)
      .def_static(
          "from_xml",
          [](const std::string& xml, double leaf_fill) {
            TreeParams params;
            return std::make_unique<Tree>(ingest::xml_to_bp_string(xml).seq, leaf_fill, params);
          },
          py::arg("xml"), py::arg("leaf_fill") = 0.75)
      .def_static(
          "random",
          [](std::uint64_t nodes, std::uint64_t seed, double leaf_fill) {
            TreeParams params;
            return std::make_unique<Tree>(ingest::random_balanced(nodes, seed).seq, leaf_fill,
                                          params);
          },
          py::arg("nodes"), py::arg("seed") = 1, py::arg("leaf_fill") = 0.75)
      .def("__len__", &Tree::size)
      .def("size", &Tree::size)
      .def("height", &Tree::height)
      .def("node_count", &Tree::node_count)
      .def("open_at", &Tree::open_at, py::arg("i"))
      .def("excess_at", &Tree::excess_at, py::arg("i"))
      .def("fwd_search", &Tree::fwd_search, py::arg("i"), py::arg("d"))
      .def("bwd_search", &Tree::bwd_search, py::arg("i"), py::arg("d"))
      .def("find_close", &Tree::find_close, py::arg("i"))
      .def("find_open", &Tree::find_open, py::arg("i"))
      .def("enclose", &Tree::enclose, py::arg("i"))
      .def("depth_at", &Tree::depth_at, py::arg("i"))
      .def("subtree_size", &Tree::subtree_size, py::arg("i"))
      .def("range_min", &Tree::range_min, py::arg("i"), py::arg("j"))
      .def("insert_pair", &Tree::insert_pair, py::arg("i"), py::arg("j"))
      .def("insert_leaf", &Tree::insert_leaf, py::arg("i"))
      .def("delete_pair", &Tree::delete_pair, py::arg("i"))
      .def("validate",
           [](const Tree& t) {
             ValidationReport rep = t.validate();
             if (!rep.ok()) throw ValidationFailure(rep.to_string());
             return true;
           })
      .def("__str__", &Tree::to_string)
      .def("to_bp", &Tree::to_string);

  py::enum_<ConcurrencyMode>(m, "Mode")
      .value("rwlock", ConcurrencyMode::rwlock)
      .value("speculative", ConcurrencyMode::speculative);

  py::class_<Engine>(m, "Engine")
      .def(py::init([](Tree& tree, const std::string& mode, unsigned retries) {
             return std::make_unique<Engine>(tree, parse_mode(mode), retries);
           }),
           py::arg("tree"), py::arg("mode") = "speculative", py::arg("retries") = 2,
           py::keep_alive<1, 2>())
      .def("size", &Engine::size, py::call_guard<py::gil_scoped_release>())
      .def("open_at", &Engine::open_at, py::arg("i"), py::call_guard<py::gil_scoped_release>())
      .def("excess_at", &Engine::excess_at, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("fwd_search", &Engine::fwd_search, py::arg("i"), py::arg("d"),
           py::call_guard<py::gil_scoped_release>())
      .def("bwd_search", &Engine::bwd_search, py::arg("i"), py::arg("d"),
           py::call_guard<py::gil_scoped_release>())
      .def("find_close", &Engine::find_close, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("find_open", &Engine::find_open, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("enclose", &Engine::enclose, py::arg("i"), py::call_guard<py::gil_scoped_release>())
      .def("depth_at", &Engine::depth_at, py::arg("i"), py::call_guard<py::gil_scoped_release>())
      .def("subtree_size", &Engine::subtree_size, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("range_min", &Engine::range_min, py::arg("i"), py::arg("j"),
           py::call_guard<py::gil_scoped_release>())
      .def("insert_pair", &Engine::insert_pair, py::arg("i"), py::arg("j"),
           py::call_guard<py::gil_scoped_release>())
      .def("insert_leaf", &Engine::insert_leaf, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("delete_pair", &Engine::delete_pair, py::arg("i"),
           py::call_guard<py::gil_scoped_release>())
      .def("stats", [](const Engine& e) { return stats_dict(e.stats()); })
      .def("reset_stats", &Engine::reset_stats);

  m.def("random_balanced",
        [](std::uint64_t nodes, std::uint64_t seed) {
          return ingest::random_balanced(nodes, seed).seq.to_string();
        },
        py::arg("nodes"), py::arg("seed") = 1);
  m.def("xml_to_bp",
        [](const std::string& xml) { return ingest::xml_to_bp_string(xml).seq.to_string(); },
        py::arg("xml"));

  m.def("benchmark",
        [](const std::string& bp, const std::string& mode, unsigned threads, double duration_s,
           double write_pct, unsigned retries, unsigned reps, std::uint64_t seed, bool validate) {
          BenchConfig cfg;
          cfg.mode = parse_mode(mode);
          cfg.threads = threads;
          cfg.duration_s = duration_s;
          cfg.write_pct = write_pct;
          cfg.retries = retries;
          cfg.reps = reps;
          cfg.seed = seed;
          cfg.validate = validate;
          cfg.check();
          std::vector<BenchRecord> rows;
          {
            py::gil_scoped_release release;
            rows = run_benchmark(ParenSeq::from_string(bp), cfg);
          }
          py::list out;
          for (const BenchRecord& r : rows) out.append(record_dict(r));
          return out;
        },
        py::arg("bp"), py::arg("mode") = "speculative", py::arg("threads") = 1,
        py::arg("duration_s") = 0.2, py::arg("write_pct") = 0.0, py::arg("retries") = 2,
        py::arg("reps") = 1, py::arg("seed") = 1, py::arg("validate") = true);
}
