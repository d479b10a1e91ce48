#include "modelzip/cli.hpp"

#include "modelzip/archive.hpp"
#include "modelzip/baselines.hpp"
#include "modelzip/bridge/bridge_scorer.hpp"
#include "modelzip/corpus.hpp"
#include "modelzip/error.hpp"
#include "modelzip/harness.hpp"
#include "modelzip/io.hpp"
#include "modelzip/model_registry.hpp"
#include "modelzip/oracle/selftest.hpp"
#include "modelzip/report_rows.hpp"
#include "modelzip/temporal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

namespace modelzip::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Flag value if given, else the config file entry, else the default.
template <class T>
T resolve(const CLI::Option* opt, const T& flag_value, const json& config, const char* key, const T& fallback) {
    if (opt && opt->count() > 0) return flag_value;
    if (config.contains(key)) {
        try {
            return config.at(key).get<T>();
        } catch (const json::exception& e) {
            throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
        }
    }
    return fallback;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    try {
        json j = json::parse(read_text_file(path));
        if (!j.is_object()) throw InvalidArgument("config file " + path + " must hold a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw InvalidArgument("config file " + path + ": " + e.what());
    }
}

bool is_endpoint(const std::string& model) {
    for (const char* scheme : {"mock:", "exec:", "tcp:", "unix:"})
        if (model.rfind(scheme, 0) == 0) return true;
    return false;
}

std::unique_ptr<Scorer> make_scorer(const std::string& model) {
    if (is_endpoint(model)) return std::make_unique<bridge::BridgeScorer>(model);
    return std::make_unique<ModelScorer>(make_model(model));
}

struct CompressArgs {
    std::string input, output, model, config;
    std::size_t context = 0;
    int precision = 0, register_width = 0;
};

int do_compress(const CompressArgs& a, const CLI::App& cmd, std::ostream& out) {
    const json cfg = load_config(a.config);
    const auto model_spec = resolve<std::string>(cmd.get_option("--model"), a.model, cfg, "model", "");
    if (model_spec.empty()) throw InvalidArgument("compress needs --model");
    const auto context = resolve<std::size_t>(cmd.get_option("--context"), a.context, cfg, "context", 2048);
    const CoderConfig coder{resolve<int>(cmd.get_option("--register-width"), a.register_width, cfg, "register_width",
                                         kDefaultRegisterWidth),
                            resolve<int>(cmd.get_option("--precision"), a.precision, cfg, "precision", kDefaultPrecision)};
    auto model = make_model(model_spec);
    if (model->alphabet_size() != 256) throw InvalidArgument("compress needs a byte model (alphabet 256)");
    const auto bytes = read_file(a.input);
    const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
    const Archive archive = encode_stream(symbols, *model, context, coder);
    const auto serialized = serialize_archive(archive);
    write_file_atomic(a.output, serialized);
    json j;
    j["model"] = archive.model_id;
    j["raw_bytes"] = bytes.size();
    j["payload_bytes"] = archive.payload_bytes();
    j["archive_bytes"] = serialized.size();
    j["chunks"] = archive.chunks.size();
    j["rate"] = bytes.empty() ? json(nullptr) : json(double(archive.payload_bytes()) / double(bytes.size()));
    out << j.dump() << '\n';
    return 0;
}

int do_decompress(const std::string& input, const std::string& output, const std::string& model_spec,
                  std::ostream& out) {
    if (model_spec.empty()) throw InvalidArgument("decompress needs --model");
    const Archive archive = parse_archive(read_file(input));
    auto model = make_model(model_spec);
    if (model->id() != archive.model_id)
        throw InvalidArgument("archive was written by model " + archive.model_id + ", not " + model->id());
    const auto symbols = decode_stream(archive, *model);
    if (symbols.size() != archive.symbol_count())
        throw IntegrityError("decoded " + std::to_string(symbols.size()) + " symbols, archive declares " +
                             std::to_string(archive.symbol_count()));
    std::vector<std::uint8_t> bytes;
    bytes.reserve(symbols.size());
    for (Symbol s : symbols) {
        if (s > 255) throw FormatError("archive holds non-byte symbols");
        bytes.push_back(static_cast<std::uint8_t>(s));
    }
    write_file_atomic(output, bytes);
    out << json{{"model", archive.model_id}, {"bytes", bytes.size()}}.dump() << '\n';
    return 0;
}

struct EvalArgs {
    std::string manifest, model, mode, domain, out, format, config, skips;
    std::size_t context = 0, step = 0;
    int precision = 0, register_width = 0;
    unsigned jobs = 0;
    bool physical = false;
};

int do_eval(const EvalArgs& a, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
    const json cfg = load_config(a.config);
    std::string model = resolve<std::string>(cmd.get_option("--model"), a.model, cfg, "model", "");
    if (model.empty())
        if (const char* env = std::getenv(kSidecarEnv)) model = env;
    if (model.empty()) throw InvalidArgument(std::string("eval needs --model or ") + kSidecarEnv);
    const auto manifest_path = resolve<std::string>(cmd.get_option("--manifest"), a.manifest, cfg, "manifest", "");
    if (manifest_path.empty()) throw InvalidArgument("eval needs --manifest");

    EvalConfig config;
    config.mode = parse_eval_mode(resolve<std::string>(cmd.get_option("--mode"), a.mode, cfg, "mode", "chunked"));
    config.context = resolve<std::size_t>(cmd.get_option("--context"), a.context, cfg, "context", 2048);
    config.step = resolve<std::size_t>(cmd.get_option("--step"), a.step, cfg, "step",
                                       config.mode == EvalMode::sliding ? std::min<std::size_t>(512, config.context)
                                                                        : config.context);
    const auto domain = resolve<std::string>(cmd.get_option("--domain"), a.domain, cfg, "domain", "auto");
    if (domain != "auto") config.domain = parse_domain(domain);
    config.precision = resolve<int>(cmd.get_option("--precision"), a.precision, cfg, "precision", kDefaultPrecision);
    config.register_width = resolve<int>(cmd.get_option("--register-width"), a.register_width, cfg, "register_width",
                                         kDefaultRegisterWidth);
    config.physical = resolve<bool>(cmd.get_option("--physical"), a.physical, cfg, "physical", false);
    const auto jobs = std::max(1u, resolve<unsigned>(cmd.get_option("--jobs"), a.jobs, cfg, "jobs", 1));
    config.validate();

    const auto manifest = CorpusManifest::load(manifest_path);
    std::vector<Document> docs;
    for (const auto& month : manifest.months())
        for (auto& d : load_bucket(manifest, month)) docs.push_back(std::move(d));

    auto prototype = make_scorer(model);
    const std::string model_name = prototype->name();
    const std::string bos = prototype->bos_policy();
    const std::size_t step = config.effective_step();

    json run_info{{"event", "run"},
                  {"model", model},
                  {"model_id", model_name},
                  {"manifest", manifest_path},
                  {"dataset", manifest.dataset},
                  {"mode", std::string(to_string(config.mode))},
                  {"context", config.context},
                  {"step", step},
                  {"domain", domain},
                  {"precision", config.precision},
                  {"register_width", config.register_width},
                  {"physical", config.physical},
                  {"jobs", jobs},
                  {"characters", "unicode_scalar_values"},
                  {"documents", docs.size()}};
    err << run_info.dump() << '\n';

    std::vector<DocumentOutcome> outcomes(docs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&](Scorer& scorer) {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= docs.size()) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                outcomes[i] = evaluate_document(docs[i], scorer, config);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1 || docs.size() <= 1) {
        worker(*prototype);
    } else {
        std::vector<std::unique_ptr<Scorer>> scorers;
        scorers.push_back(std::move(prototype));
        for (unsigned j = 1; j < std::min<std::size_t>(jobs, docs.size()); ++j) scorers.push_back(scorers[0]->fork());
        std::vector<std::thread> threads;
        for (auto& s : scorers) threads.emplace_back(worker, std::ref(*s));
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ReportRow> rows;
    std::string skipped;
    auto base_row = [&](const Document& d) {
        ReportRow r;
        r.model = model_name;
        r.dataset = manifest.dataset;
        r.year_month = d.year_month.to_string();
        r.mode = std::string(to_string(config.mode));
        r.context = config.context;
        r.step = step;
        r.bos_policy = bos;
        return r;
    };
    for (std::size_t i = 0; i < docs.size();) {
        const YearMonth month = docs[i].year_month;
        std::vector<MetricsReport> month_reports;
        const std::size_t first = i;
        for (; i < docs.size() && docs[i].year_month == month; ++i) {
            const auto& o = outcomes[i];
            if (!o.report) {
                json s{{"event", "skip"}, {"doc_id", o.doc_id}, {"year_month", month.to_string()}, {"reason", o.skip_reason}};
                err << s.dump() << '\n';
                skipped += s.dump() + "\n";
                continue;
            }
            ReportRow r = base_row(docs[i]);
            r.doc_id = o.doc_id;
            r.set_metrics(*o.report);
            rows.push_back(r);
            month_reports.push_back(*o.report);
        }
        if (!month_reports.empty()) {
            ReportRow r = base_row(docs[first]);
            r.set_metrics(aggregate(month_reports));
            rows.push_back(r);
        }
    }
    if (!a.skips.empty()) write_file_atomic(a.skips, skipped);

    std::string format = a.format;
    if (format.empty()) format = fs::path(a.out).extension() == ".jsonl" ? "jsonl" : "csv";
    if (format != "csv" && format != "jsonl") throw InvalidArgument("--format must be csv or jsonl");
    const std::string text = format == "csv" ? rows_to_csv(rows) : rows_to_jsonl(rows);
    if (a.out.empty())
        out << text;
    else
        write_file_atomic(a.out, text);
    return 0;
}

int do_report(const std::string& rows_path, const std::string& cutoff_text, const std::string& out_dir,
              const std::string& config_path, const CLI::App& cmd, std::ostream& out) {
    const json cfg = load_config(config_path);
    const auto cutoff_str = resolve<std::string>(cmd.get_option("--cutoff"), cutoff_text, cfg, "cutoff", "");
    if (cutoff_str.empty()) throw InvalidArgument("report needs --cutoff");
    const auto cutoff = YearMonth::parse(cutoff_str);
    const auto rows = parse_rows(read_text_file(rows_path));
    auto series = series_from_rows(rows);
    if (series.empty()) throw InvalidArgument("no report rows in " + rows_path);
    std::vector<TemporalSummary> summaries;
    for (const auto& s : series) summaries.push_back(summarize(s, cutoff));
    emit_report(summaries, series, cutoff, out_dir);
    out << read_text_file(fs::path(out_dir) / "summary.csv");
    return 0;
}

int do_ingest(const std::string& dir, const std::string& out_path, const std::string& dataset, std::ostream& out) {
    if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir);
    const auto manifest = ingest(dir, dataset);
    if (out_path.empty()) {
        out << manifest.to_json() << '\n';
        return 0;
    }
    manifest.save(out_path);
    out << json{{"dataset", manifest.dataset}, {"documents", manifest.entries.size()}, {"months", manifest.months().size()}}
               .dump()
        << '\n';
    return 0;
}

void report_error(std::ostream& err, const std::string& name, const std::string& message, bool internal,
                  const json& extra = json::object()) {
    json j{{"error", name}, {"kind", internal ? "internal" : "user"}, {"message", message}};
    j.update(extra);
    err << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"modelzip: arithmetic-coding compressor and compression-based model evaluation", "modelzip"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    CompressArgs ca;
    auto* compress = app.add_subcommand("compress", "Compress a file into an archive");
    compress->add_option("input", ca.input, "Input file")->required();
    compress->add_option("output", ca.output, "Archive to write")->required();
    compress->add_option("--model", ca.model, "Byte model spec");
    compress->add_option("--context", ca.context, "Chunk size in symbols");
    compress->add_option("--precision", ca.precision, "Frequency precision F in bits");
    compress->add_option("--register-width", ca.register_width, "Coder register width B in bits");
    compress->add_option("--config", ca.config, "JSON config file");

    std::string d_in, d_out, d_model;
    auto* decompress = app.add_subcommand("decompress", "Restore a file from an archive");
    decompress->add_option("input", d_in, "Archive")->required();
    decompress->add_option("output", d_out, "File to write")->required();
    decompress->add_option("--model", d_model, "Byte model spec used for compression")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Score a corpus and print per-document and per-month metrics");
    eval->add_option("--manifest", ea.manifest, "Corpus manifest JSON");
    eval->add_option("--model", ea.model, "Model spec or bridge endpoint (mock:, exec:, tcp:, unix:)");
    eval->add_option("--mode", ea.mode, "chunked or sliding");
    eval->add_option("--context", ea.context, "Context size C in symbols");
    eval->add_option("--step", ea.step, "Sliding step S in symbols");
    eval->add_option("--domain", ea.domain, "auto, text_tokens or bytes");
    eval->add_option("--precision", ea.precision, "Frequency precision for --physical");
    eval->add_option("--register-width", ea.register_width, "Coder register width for --physical");
    eval->add_flag("--physical", ea.physical, "Also arithmetic-code every window and report payload rates");
    eval->add_option("--jobs", ea.jobs, "Documents evaluated in parallel");
    eval->add_option("--out", ea.out, "Rows file (.csv or .jsonl); stdout when absent");
    eval->add_option("--format", ea.format, "csv or jsonl");
    eval->add_option("--skips", ea.skips, "JSONL file listing skipped documents");
    eval->add_option("--config", ea.config, "JSON config file");

    std::string r_rows, r_cutoff, r_out, r_config;
    auto* report = app.add_subcommand("report", "Temporal summary from report rows");
    report->add_option("--rows", r_rows, "Rows file (CSV or JSONL)")->required();
    report->add_option("--cutoff", r_cutoff, "Last training-period month, YYYY-MM");
    report->add_option("--out", r_out, "Output directory")->required();
    report->add_option("--config", r_config, "JSON config file");

    std::string i_dir, i_out, i_dataset;
    auto* ingest_cmd = app.add_subcommand("ingest", "Index a dataset laid out as <dir>/YYYY-MM/<files>");
    ingest_cmd->add_option("dir", i_dir, "Dataset directory")->required();
    ingest_cmd->add_option("--out", i_out, "Manifest file to write");
    ingest_cmd->add_option("--dataset", i_dataset, "Dataset name (default: directory name)");

    std::uint64_t seed = 1;
    std::size_t cases = 100;
    auto* selftest = app.add_subcommand("selftest", "Exact-arithmetic oracle checks and bridge conformance");
    selftest->add_option("--seed", seed, "Seed for case generation");
    selftest->add_option("--cases", cases, "Number of oracle cases");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::Success&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage_error", e.what(), false);
        return 1;
    }

    try {
        if (*compress) return do_compress(ca, *compress, out);
        if (*decompress) return do_decompress(d_in, d_out, d_model, out);
        if (*eval) return do_eval(ea, *eval, out, err);
        if (*report) return do_report(r_rows, r_cutoff, r_out, r_config, *report, out);
        if (*ingest_cmd) return do_ingest(i_dir, i_out, i_dataset, out);
        if (*selftest) {
            const auto result = oracle::run_selftest(seed, cases);
            out << oracle::to_json(result) << '\n';
            return result.passed() ? 0 : 2;
        }
    } catch (const CodecError& e) {
        json extra = json::object();
        if (e.chunk_index()) extra["chunk_index"] = *e.chunk_index();
        if (e.symbol_index()) extra["symbol_index"] = *e.symbol_index();
        report_error(err, e.name(), e.what(), e.kind() == ErrorKind::internal, extra);
        return e.kind() == ErrorKind::internal ? 2 : 1;
    } catch (const Error& e) {
        report_error(err, e.name(), e.what(), e.kind() == ErrorKind::internal);
        return e.kind() == ErrorKind::internal ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
        report_error(err, "io_error", e.what(), false);
        return 1;
    } catch (const std::exception& e) {
        report_error(err, "internal_error", e.what(), true);
        return 2;
    }
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace modelzip::cli
