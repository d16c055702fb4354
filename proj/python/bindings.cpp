#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mdids/config.hpp"
#include "mdids/engine.hpp"
#include "mdids/error.hpp"
#include "mdids/propagation.hpp"

namespace py = pybind11;
using namespace mdids;

namespace {

Config config_from(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

RecordTable records_from(const std::string& csv, RecordSchema schema) {
    std::istringstream in(csv);
    return parse_records(in, schema);
}

Dataset labeled_windows(const DetectorModel& model, const std::string& csv, const std::string& label_column) {
    RecordSchema schema;
    schema.parameters = model.parameters;
    schema.label_column = label_column;
    schema.require_label = true;
    const auto table = records_from(csv, schema);
    return aggregate_windows(table.records, model.parameters, window_spec(model.config, model.parameters));
}

DetectorModel train_csv(const std::string& csv, const std::string& config) {
    const auto cfg = config_from(config);
    RecordSchema schema;
    schema.label_column = cfg.label_column;
    schema.require_label = true;
    return train(records_from(csv, schema), cfg.train);
}

py::list detect_csv(const DetectorModel& model, const std::string& csv, std::size_t lag_windows) {
    RecordSchema schema;
    schema.parameters = model.parameters;
    const auto table = records_from(csv, schema);
    py::list out;
    for (const auto& r : detect(model, table.records, {lag_windows})) {
        py::dict row;
        row["window_start"] = r.window_start;
        row["afs"] = r.afs;
        row["af"] = r.af;
        row["flagged"] = r.flagged;
        out.append(row);
    }
    return out;
}

py::dict evaluate_csv(const DetectorModel& model, const std::string& csv, const std::string& label_column) {
    const auto ev = evaluate(model, labeled_windows(model, csv, label_column));
    py::dict d;
    d["risk"] = ev.risk;
    d["tp"] = ev.true_positive;
    d["tn"] = ev.true_negative;
    d["fp"] = ev.false_positive;
    d["fn"] = ev.false_negative;
    d["dimension_risks"] = ev.dimension_risks;
    return d;
}

py::dict feedback_csv(const DetectorModel& model, const std::string& csv, std::size_t min_batch,
                      double holdout_fraction, std::uint64_t seed, const std::string& label_column) {
    const auto outcome =
        feedback(model, {labeled_windows(model, csv, label_column)}, FeedbackConfig{min_batch, holdout_fraction, seed});
    py::dict d;
    d["status"] = std::string(to_string(outcome.status));
    d["model"] = outcome.model;
    d["incumbent_risk"] = outcome.incumbent_risk;
    d["candidate_risk"] = outcome.candidate_risk;
    d["holdout_size"] = outcome.holdout_size;
    return d;
}

py::list pca_report(const std::string& csv, const std::string& config) {
    const auto cfg = config_from(config);
    RecordSchema schema;
    schema.label_column = cfg.label_column;
    const auto table = records_from(csv, schema);
    const auto windows = aggregate_windows(table.records, table.parameters, window_spec(cfg.train, table.parameters));
    const auto pca = fit_pca(windows, cfg.train.variability_threshold);
    py::list out;
    for (const auto& row : variability_table(pca.eigenpairs))
        out.append(py::make_tuple(row.component, row.eigenvalue, row.percent, row.cumulative));
    return out;
}

py::list fragment(py::bytes message, std::size_t m, std::uint64_t seed, std::uint64_t message_id) {
    const std::string raw = message;
    const std::vector<std::uint8_t> data(raw.begin(), raw.end());
    py::list out;
    for (const auto& f : fragment_message(data, m, seed, message_id))
        out.append(py::make_tuple(f.message_id, f.index, f.total,
                                  py::bytes(reinterpret_cast<const char*>(f.payload.data()), f.payload.size())));
    return out;
}

py::bytes reassemble_fragments(const py::list& parts) {
    std::vector<Fragment> frags;
    for (const auto& item : parts) {
        const auto t = item.cast<py::tuple>();
        const std::string payload = t[3].cast<py::bytes>();
        frags.push_back({t[0].cast<std::uint64_t>(), t[1].cast<std::size_t>(), t[2].cast<std::size_t>(),
                         std::vector<std::uint8_t>(payload.begin(), payload.end())});
    }
    const auto out = reassemble(frags);
    return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
}

py::dict simulate_text(const std::string& topology, const std::string& script, double p_loss, std::size_t fragments,
                       std::size_t rounds, std::uint64_t seed, bool exchange_indicators) {
    std::istringstream topo_in(topology), script_in(script);
    auto topo = parse_topology(topo_in);
    auto events = parse_event_script(script_in);
    const auto result =
        simulate(topo, {}, events, SimulationConfig{p_loss, fragments, rounds, seed, exchange_indicators});
    std::ostringstream trace;
    write_trace(trace, result);
    py::dict lists;
    for (const auto& [id, node] : result.nodes) {
        py::dict entries;
        for (const auto& [source, e] : node.malicious) entries[py::str(source)] = e.first_seen_round;
        lists[py::str(id)] = entries;
    }
    const auto& t = result.totals;
    py::dict d;
    d["trace"] = trace.str();
    d["lists"] = lists;
    d["messages"] = t.messages_sent;
    d["messages_lost"] = t.messages_lost;
    d["fragments_dropped"] = t.fragments_dropped;
    d["list_updates"] = t.list_updates;
    d["adoptions"] = t.adoptions;
    return d;
}

}  // namespace

PYBIND11_MODULE(_mdids, m) {
    m.doc() = "Multi-dimensional anomaly-based intrusion detection";

    auto base = py::register_exception<Error>(m, "MdidsError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<FormatVersionError>(m, "FormatVersionError", base.ptr());
    py::register_exception<IncompleteMessageError>(m, "IncompleteMessageError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

    py::class_<DetectorModel>(m, "Model")
        .def_property_readonly("parameters", [](const DetectorModel& d) { return d.parameters; })
        .def_property_readonly("dimensions", [](const DetectorModel& d) { return d.global.dimensions; })
        .def_property_readonly("version", [](const DetectorModel& d) { return d.metadata.model_version; })
        .def_property_readonly("global_risk", [](const DetectorModel& d) { return d.metadata.global_risk; })
        .def_property_readonly("windows", [](const DetectorModel& d) { return d.metadata.observations; })
        .def("serialize", &serialize_model)
        .def_static("deserialize", [](const std::string& text) { return deserialize_model(text); })
        .def("save", [](const DetectorModel& d, const std::filesystem::path& p) { persist(d, p); })
        .def_static("load", [](const std::filesystem::path& p) { return load(p); })
        .def("__eq__", [](const DetectorModel& a, const DetectorModel& b) { return a == b; });

    m.def("train", &train_csv, py::arg("csv"), py::arg("config") = "",
          "Train a detector from labeled records given as csv text.");
    m.def("detect", &detect_csv, py::arg("model"), py::arg("csv"), py::arg("lag_windows") = 2,
          "Score records and return one dict per window.");
    m.def("evaluate", &evaluate_csv, py::arg("model"), py::arg("csv"), py::arg("label_column") = "label");
    m.def("feedback", &feedback_csv, py::arg("model"), py::arg("csv"), py::arg("min_batch") = 50,
          py::arg("holdout_fraction") = 0.2, py::arg("seed") = kDefaultSeed, py::arg("label_column") = "label");
    m.def("pca_report", &pca_report, py::arg("csv"), py::arg("config") = "",
          "(component, eigenvalue, percent, cumulative) per principal component.");
    m.def("fragment", &fragment, py::arg("message"), py::arg("m"), py::arg("seed"), py::arg("message_id") = 0);
    m.def("reassemble", &reassemble_fragments, py::arg("fragments"));
    m.def("simulate", &simulate_text, py::arg("topology"), py::arg("script"), py::arg("p_loss") = 0.0,
          py::arg("fragments") = 2, py::arg("rounds") = 10, py::arg("seed") = kDefaultSeed,
          py::arg("exchange_indicators") = true);
}
