#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mdids/config.hpp"
#include "mdids/engine.hpp"
#include "mdids/error.hpp"
#include "mdids/propagation.hpp"

namespace mdids::cli {

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string model;
    std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "configuration file (key = value)");
    cmd->add_option("--seed", c.seed, "random seed, overrides the config");
    cmd->add_option("--model", c.model, "model file");
    cmd->add_option("--output", c.output, "output file");
}

Config config_of(const Common& c) {
    Config cfg = c.config.empty() ? Config{} : load_config(c.config);
    if (c.seed) cfg.set_seed(*c.seed);
    return cfg;
}

std::string slurp(const std::string& path, std::istream& in) {
    std::ostringstream buf;
    if (path == "-") {
        buf << in.rdbuf();
        return buf.str();
    }
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ArgumentError(fmt::format("cannot open '{}'", path));
    buf << file.rdbuf();
    return buf.str();
}

bool blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
}

RecordTable read_records(const std::string& text, const RecordSchema& schema) {
    std::istringstream in(text);
    return parse_records(in, schema);
}

/// Labeled windows over the model's parameters, aggregated as in training.
Dataset labeled_windows(const DetectorModel& model, const std::string& text, const std::string& label_column) {
    RecordSchema schema;
    schema.parameters = model.parameters;
    schema.label_column = label_column;
    schema.require_label = true;
    const auto table = read_records(text, schema);
    return aggregate_windows(table.records, model.parameters, window_spec(model.config, model.parameters));
}

class OutputFile {
public:
    OutputFile(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty()) return;
        file_.open(path, std::ios::binary | std::ios::trunc);
        if (!file_) throw ArgumentError(fmt::format("cannot write '{}'", path));
        stream_ = &file_;
    }
    std::ostream& operator*() { return *stream_; }
    bool is_file() const { return file_.is_open(); }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::string num(double v) {
    return std::isnan(v) ? "nan" : fmt::format("{}", v);
}

void print_variability(std::ostream& out, const std::string& label, const PcaModel& pca) {
    for (const auto& row : variability_table(pca.eigenpairs))
        out << fmt::format("variability.{}: {},{:.6f},{:.4f},{:.4f}\n", label, row.component, row.eigenvalue,
                           row.percent, row.cumulative);
}

void print_tree(std::ostream& out, const std::string& label, const TreeIndicator& tree) {
    std::istringstream dump(dump_tree(tree));
    std::string line;
    while (std::getline(dump, line)) out << fmt::format("tree.{}: {}\n", label, line);
}

// --- commands ----------------------------------------------------------------

int cmd_train(const std::string& input, const Common& c, std::ostream& out, std::ostream& err, std::istream& in) {
    if (c.model.empty()) throw ArgumentError("train needs --model to name the model file to write");
    const auto cfg = config_of(c);
    RecordSchema schema;
    schema.label_column = cfg.label_column;
    schema.require_label = true;
    const auto table = read_records(slurp(input, in), schema);
    const auto model = train(table, cfg.train);
    persist(model, c.model);

    const auto& md = model.metadata;
    out << fmt::format("windows: {}\nbenign: {}\nanomalous: {}\n", md.observations, md.benign, md.anomalous);
    out << fmt::format("parameters: {}\n", fmt::join(model.parameters, ","));
    for (const auto& block : model.blocks) {
        out << fmt::format("block.{}: components={} retained={}\n", block.name, block.pca.selected_p,
                           fmt::join(block.pca.component_names, ","));
        for (const auto& d : block.pca.standardization.dropped)
            err << fmt::format("note: constant column '{}' left out of block {}\n", d, block.name);
        print_variability(out, block.name, block.pca);
    }
    for (std::size_t d = 0; d < model.dimensions.size(); ++d) {
        const auto& ind = model.indicators[d];
        std::vector<std::string> cands;
        for (const auto& cand : md.candidate_risks[d]) cands.push_back(fmt::format("{}:{}", cand.learner, num(cand.risk)));
        out << fmt::format("dimension.{}: learner={} risk={} candidates={}\n", ind.dimension_id,
                           learner_name(ind.model), num(ind.empirical_risk), fmt::join(cands, ","));
    }
    out << fmt::format("global: {}\n", model.global.is_identity() ? "identity" : "tree");
    out << fmt::format("global_risk: {}\nmodel_version: {}\nmodel: {}\n", num(md.global_risk), md.model_version, c.model);
    // a dimension won by the rule learner still gets the competing tree shown
    for (std::size_t d = 0; d < model.dimensions.size(); ++d) {
        const auto& ind = model.indicators[d];
        if (const auto* tree = std::get_if<TreeIndicator>(&ind.model)) {
            print_tree(out, ind.dimension_id, *tree);
        } else if (cfg.train.learners.use_tree) {
            const auto& dim = model.dimensions[d];
            const auto& block = model.blocks[dim.block];
            const auto raw = model.training_windows.select_columns(block.parameters);
            const auto data = project(block.pca, raw).select_columns(dim.components);
            print_tree(out, ind.dimension_id, fit_tree(data, cfg.train.learners.tree));
        }
    }
    if (model.global.tree) print_tree(out, "global", *model.global.tree);
    return ok;
}

int cmd_detect(const std::string& input, const Common& c, std::ostream& out, std::ostream& err, std::istream& in) {
    if (c.model.empty()) throw ArgumentError("detect needs --model");
    const auto cfg = config_of(c);
    const auto model = load(c.model);
    const auto text = slurp(input, in);
    std::vector<RawRecord> records;
    if (!blank(text)) {
        RecordSchema schema;
        schema.parameters = model.parameters;
        schema.label_column = cfg.label_column;
        records = read_records(text, schema).records;
    }

    OutputFile report(c.output, out);
    *report << "window_start";
    for (const auto& d : model.global.dimensions) *report << ",af_" << d;
    *report << ",AF,flagged\n";
    auto write = [&](const std::vector<AnomalyReport>& rows) {
        for (const auto& r : rows) {
            *report << r.window_start;
            for (double af : r.afs) *report << ',' << num(af);
            *report << ',' << num(r.af) << ',' << (r.flagged ? 1 : 0) << '\n';
        }
        (*report).flush();
    };
    Detector detector(model, cfg.detect);
    for (const auto& rec : records) write(detector.push(rec));
    write(detector.finish());
    *report << fmt::format("# windows_scored={} flagged={} late_records={}\n", detector.scored(), detector.flagged(),
                           detector.rejected());
    if (detector.rejected() > 0)
        err << fmt::format("warning: {} records arrived after their window closed and were not scored\n",
                           detector.rejected());
    if (report.is_file())
        out << fmt::format("windows_scored: {}\nflagged: {}\nlate_records: {}\n", detector.scored(), detector.flagged(),
                           detector.rejected());
    return ok;
}

int cmd_feedback(const std::string& input, const Common& c, std::ostream& out, std::ostream&, std::istream& in) {
    if (c.model.empty()) throw ArgumentError("feedback needs --model");
    const auto cfg = config_of(c);
    const auto model = load(c.model);
    const auto windows = labeled_windows(model, slurp(input, in), cfg.label_column);
    const auto outcome = feedback(model, {windows, FeedbackSource::analyst}, cfg.feedback);

    out << fmt::format("status: {}\nbatch_windows: {}\n", to_string(outcome.status), windows.size());
    if (outcome.status == FeedbackStatus::deferred) {
        out << fmt::format("min_batch: {}\n", cfg.feedback.min_batch);
        return ok;
    }
    out << fmt::format("holdout_windows: {}\nincumbent_risk: {}\ncandidate_risk: {}\n", outcome.holdout_size,
                       num(outcome.incumbent_risk), num(outcome.candidate_risk));
    if (outcome.status == FeedbackStatus::accepted) {
        if (c.output.empty()) throw ArgumentError("feedback needs --output to write an accepted model");
        persist(outcome.model, c.output);
        out << fmt::format("model_version: {}\nmodel: {}\n", outcome.model.metadata.model_version, c.output);
    }
    return ok;
}

int cmd_pca_report(const std::string& input, const Common& c, std::ostream& out, std::ostream& err, std::istream& in) {
    const auto cfg = config_of(c);
    RecordSchema schema;
    schema.label_column = cfg.label_column;
    const auto table = read_records(slurp(input, in), schema);
    const auto windows =
        aggregate_windows(table.records, table.parameters, window_spec(cfg.train, table.parameters));
    const auto pca = fit_pca(windows, cfg.train.variability_threshold);
    for (const auto& d : pca.standardization.dropped) err << fmt::format("note: constant column '{}' left out\n", d);

    OutputFile report(c.output, out);
    *report << "component,eigenvalue,percent,cumulative\n";
    for (const auto& row : variability_table(pca.eigenpairs))
        *report << fmt::format("{},{:.6f},{:.4f},{:.4f}\n", row.component, row.eigenvalue, row.percent, row.cumulative);
    return ok;
}

int cmd_simulate(const std::string& topology_path, const std::string& script_path, const Common& c,
                 std::ostream& out, std::ostream& err, std::istream& in) {
    const auto cfg = config_of(c);
    std::istringstream topo_text(slurp(topology_path, in));
    auto topology = parse_topology(topo_text);
    std::istringstream script_text(slurp(script_path, in));
    auto script = parse_event_script(script_text);

    std::map<std::string, NodeSetup> setups;
    for (const auto& [id, files] : cfg.nodes) {
        NodeSetup setup;
        if (!files.model.empty()) setup.model = load(files.model);
        if (!files.validation.empty()) {
            if (!setup.model) throw ArgumentError(fmt::format("node '{}' has validation data but no model", id));
            setup.validation = labeled_windows(*setup.model, slurp(files.validation.string(), in), cfg.label_column);
        }
        setups.emplace(id, std::move(setup));
    }

    const auto result = simulate(std::move(topology), setups, std::move(script), cfg.simulation);
    OutputFile trace(c.output, out);
    write_trace(*trace, result);
    std::ostream& summary = trace.is_file() ? out : err;
    const auto& t = result.totals;
    summary << fmt::format("rounds: {}\nmessages: {}\nmessages_lost: {}\nfragments_dropped: {}\nlist_updates: {}\n"
                           "adoptions: {}\n",
                           result.rounds.size(), t.messages_sent, t.messages_lost, t.fragments_dropped, t.list_updates,
                           t.adoptions);
    return ok;
}

int cmd_eval(const std::string& input, const Common& c, std::ostream& out, std::ostream&, std::istream& in) {
    if (c.model.empty()) throw ArgumentError("eval needs --model");
    const auto cfg = config_of(c);
    const auto model = load(c.model);
    const auto windows = labeled_windows(model, slurp(input, in), cfg.label_column);
    const auto ev = evaluate(model, windows);
    out << fmt::format("windows: {}\nrisk: {}\ntp: {}\ntn: {}\nfp: {}\nfn: {}\n", windows.size(), num(ev.risk),
                       ev.true_positive, ev.true_negative, ev.false_positive, ev.false_negative);
    for (std::size_t d = 0; d < ev.dimension_risks.size(); ++d)
        out << fmt::format("risk.{}: {}\n", model.global.dimensions[d], num(ev.dimension_risks[d]));
    return ok;
}

int exit_code(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::usage: return usage;
        case ErrorClass::data: return data;
        case ErrorClass::numeric: return numeric;
        case ErrorClass::integrity: return integrity;
    }
    return usage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
    CLI::App app{"Multi-dimensional anomaly-based intrusion detection", "mdids"};
    app.require_subcommand(1);
    Common common;
    std::string input = "-";
    std::string topology, script;

    auto* train = app.add_subcommand("train", "learn a detector from labeled records");
    train->add_option("input", input, "labeled records csv ('-' for standard input)")->required();
    add_common(train, common);

    auto* detect = app.add_subcommand("detect", "score records and report anomaly factors per window");
    detect->add_option("input", input, "records csv, '-' or omitted for standard input");
    add_common(detect, common);

    auto* fb = app.add_subcommand("feedback", "retrain from confirmed labels behind a holdout gate");
    fb->add_option("input", input, "labeled batch csv")->required();
    add_common(fb, common);

    auto* pca = app.add_subcommand("pca-report", "variability per principal component as csv");
    pca->add_option("input", input, "records csv")->required();
    add_common(pca, common);

    auto* sim = app.add_subcommand("simulate", "propagate detections across a node topology");
    sim->add_option("topology", topology, "edge list, one 'nodeA nodeB' pair per line")->required();
    sim->add_option("script", script, "detections, one 'round,node,source' per line")->required();
    add_common(sim, common);

    auto* ev = app.add_subcommand("eval", "risk and confusion counts on labeled records");
    ev->add_option("input", input, "labeled records csv")->required();
    add_common(ev, common);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }

    try {
        if (train->parsed()) return cmd_train(input, common, out, err, in);
        if (detect->parsed()) return cmd_detect(input, common, out, err, in);
        if (fb->parsed()) return cmd_feedback(input, common, out, err, in);
        if (pca->parsed()) return cmd_pca_report(input, common, out, err, in);
        if (sim->parsed()) return cmd_simulate(topology, script, common, out, err, in);
        if (ev->parsed()) return cmd_eval(input, common, out, err, in);
    } catch (const ParseError& e) {
        for (const auto& issue : e.issues()) err << fmt::format("line {}: {}\n", issue.line, issue.reason);
        return data;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.error_class());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}

}  // namespace mdids::cli
