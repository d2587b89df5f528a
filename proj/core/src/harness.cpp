#include "acs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "acs/protocol.hpp"
#include "acs/version.hpp"

namespace acs {

using nlohmann::json;

namespace {

// emitted floats carry 9 significant digits so independent implementations
// can compare files textually
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string json_escape(const std::string & s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (const char c : s) {
        switch (c) {
            case '"':  out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

// builds one JSON object line with insertion order preserved
class JsonLine {
public:
    JsonLine & str(const char * key, const std::string & value) {
        return raw(key, "\"" + json_escape(value) + "\"");
    }
    JsonLine & num(const char * key, double value) { return raw(key, fmt_double(value)); }
    JsonLine & integer(const char * key, long long value) {
        return raw(key, std::to_string(value));
    }
    JsonLine & opt_num(const char * key, const std::optional<double> & value) {
        if (value) {
            num(key, *value);
        }
        return *this;
    }
    JsonLine & opt_int(const char * key, const std::optional<int> & value) {
        if (value) {
            integer(key, *value);
        }
        return *this;
    }

    std::string finish() { return "{" + body_ + "}"; }

private:
    JsonLine & raw(const char * key, const std::string & rendered) {
        if (!body_.empty()) {
            body_ += ',';
        }
        body_ += '"';
        body_ += key;
        body_ += "\":";
        body_ += rendered;
        return *this;
    }

    std::string body_;
};

std::vector<TokenId> parse_token_array(const json & arr, const char * what) {
    if (!arr.is_array()) {
        throw ValidationError(std::string(what) + " is not an array");
    }
    std::vector<TokenId> tokens;
    tokens.reserve(arr.size());
    for (const auto & v : arr) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ValidationError(std::string(what) + " contains a non-token entry");
        }
        tokens.push_back(v.get<TokenId>());
    }
    return tokens;
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::vector<PromptRecord> load_corpus(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open corpus file " + path.string());
    }
    std::vector<PromptRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            PromptRecord record;
            record.id = j.at("id").get<std::string>();
            record.prompt = parse_token_array(j.at("prompt"), "prompt");
            if (j.contains("reference") && !j.at("reference").is_null()) {
                record.reference = parse_token_array(j.at("reference"), "reference");
            }
            if (record.prompt.empty()) {
                throw ValidationError("prompt is empty");
            }
            if (!seen.insert(record.id).second) {
                throw ValidationError("duplicate id '" + record.id + "'");
            }
            records.push_back(std::move(record));
        } catch (const std::exception & e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void save_corpus(const std::filesystem::path & path, std::span<const PromptRecord> records) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write corpus file " + path.string());
    }
    for (const auto & record : records) {
        json j;
        j["id"] = record.id;
        j["prompt"] = record.prompt;
        if (record.reference) {
            j["reference"] = *record.reference;
        }
        out << j.dump() << '\n';
    }
}

std::unique_ptr<Backend> open_backend(const BackendSpec & spec) {
    if (spec.type == "synthetic") {
        return make_synthetic_backend(spec.vocab_size, spec.hidden_dim, spec.seed,
                                      spec.repetition_bias);
    }
    if (spec.type == "command") {
        if (spec.command.empty()) {
            throw ArgumentError("command backend needs a non-empty command");
        }
        return std::make_unique<StreamBackend>(make_pipe_channel(spec.command), spec.binary);
    }
    throw ArgumentError("unknown backend type '" + spec.type + "'");
}

namespace {

BackendSpec backend_spec_from_json(const json & j) {
    BackendSpec spec;
    spec.type = j.value("type", "synthetic");
    spec.vocab_size = j.value("vocab_size", spec.vocab_size);
    spec.hidden_dim = j.value("hidden_dim", spec.hidden_dim);
    spec.seed = j.value("seed", spec.seed);
    spec.repetition_bias = j.value("repetition_bias", spec.repetition_bias);
    spec.command = j.value("command", spec.command);
    spec.binary = j.value("binary", spec.binary);
    return spec;
}

json backend_spec_to_json(const BackendSpec & spec) {
    json j;
    j["type"] = spec.type;
    if (spec.type == "command") {
        j["command"] = spec.command;
        j["binary"] = spec.binary;
    } else {
        j["vocab_size"] = spec.vocab_size;
        j["hidden_dim"] = spec.hidden_dim;
        j["seed"] = spec.seed;
        j["repetition_bias"] = spec.repetition_bias;
    }
    return j;
}

DecoderConfig decoder_from_json(const json & j) {
    DecoderConfig config;
    const std::string method = j.value("method", std::string(to_string(config.method)));
    const auto parsed = decode_method_from_string(method);
    if (!parsed) {
        throw ValidationError("unknown decoding method '" + method + "'");
    }
    config.method = *parsed;
    config.k = j.value("k", config.k);
    config.alpha = j.value("alpha", config.alpha);
    config.p = j.value("p", config.p);
    config.tau = j.value("tau", config.tau);
    config.q = j.value("q", config.q);
    config.max_new_tokens = j.value("max_new_tokens", config.max_new_tokens);
    config.rng_seed = j.value("rng_seed", config.rng_seed);
    if (j.contains("stop_tokens")) {
        config.stop_tokens = parse_token_array(j.at("stop_tokens"), "stop_tokens");
    }
    return config;
}

json decoder_to_json(const DecoderConfig & config) {
    json j;
    j["method"] = to_string(config.method);
    j["k"] = config.k;
    j["alpha"] = config.alpha;
    j["p"] = config.p;
    j["tau"] = config.tau;
    j["q"] = config.q;
    j["max_new_tokens"] = config.max_new_tokens;
    j["rng_seed"] = config.rng_seed;
    j["stop_tokens"] = config.stop_tokens;
    return j;
}

} // namespace

RunManifest load_manifest(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open manifest " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const std::exception & e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    RunManifest manifest;
    if (j.contains("backend")) {
        manifest.backend = backend_spec_from_json(j.at("backend"));
    }
    if (j.contains("decoder")) {
        manifest.decoder = decoder_from_json(j.at("decoder"));
    }
    manifest.corpus_path = j.value("corpus", std::string());
    manifest.trace_path = j.value("trace_out", std::string());
    manifest.report_path = j.value("report_out", std::string());
    manifest.workers = j.value("workers", manifest.workers);
    manifest.created_at = j.value("created_at", manifest.created_at);
    manifest.tool_version = j.value("tool_version", manifest.tool_version);
    return manifest;
}

void save_manifest(const std::filesystem::path & path, const RunManifest & manifest) {
    json j;
    j["backend"] = backend_spec_to_json(manifest.backend);
    j["decoder"] = decoder_to_json(manifest.decoder);
    j["corpus"] = manifest.corpus_path.string();
    j["trace_out"] = manifest.trace_path.string();
    j["report_out"] = manifest.report_path.string();
    j["workers"] = manifest.workers;
    j["created_at"] = manifest.created_at.empty() ? timestamp_utc() : manifest.created_at;
    j["tool_version"] =
        manifest.tool_version.empty() ? std::string(ACS_VERSION_STRING) : manifest.tool_version;
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write manifest " + path.string());
    }
    out << j.dump(2) << '\n';
}

namespace {

std::string trace_line_to_json(const TraceLine & line) {
    JsonLine out;
    out.str("id", line.id);
    out.integer("step", line.record.step);
    out.integer("chosen", line.record.chosen);
    out.opt_num("full_entropy", line.record.full_entropy);
    out.opt_num("topk_entropy", line.record.topk_entropy);
    out.opt_num("delta_t", line.record.delta_t);
    out.opt_num("delta_tk", line.record.delta_tk);
    out.opt_int("k_t", line.record.k_t);
    out.opt_num("alpha_t", line.record.alpha_t);
    out.opt_num("model_confidence", line.record.model_confidence);
    out.opt_num("penalty", line.record.penalty);
    return out.finish();
}

TraceLine trace_line_from_json(const json & j) {
    TraceLine line;
    line.id = j.at("id").get<std::string>();
    line.record.step = j.at("step").get<int>();
    line.record.chosen = j.at("chosen").get<TokenId>();
    const auto opt_d = [&](const char * key) -> std::optional<double> {
        if (j.contains(key)) {
            return j.at(key).get<double>();
        }
        return std::nullopt;
    };
    line.record.full_entropy = opt_d("full_entropy");
    line.record.topk_entropy = opt_d("topk_entropy");
    line.record.delta_t = opt_d("delta_t");
    line.record.delta_tk = opt_d("delta_tk");
    if (j.contains("k_t")) {
        line.record.k_t = j.at("k_t").get<int>();
    }
    line.record.alpha_t = opt_d("alpha_t");
    line.record.model_confidence = opt_d("model_confidence");
    line.record.penalty = opt_d("penalty");
    return line;
}

} // namespace

std::vector<TraceLine> load_trace(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open trace file " + path.string());
    }
    std::vector<TraceLine> lines;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.empty()) {
            continue;
        }
        try {
            lines.push_back(trace_line_from_json(json::parse(raw)));
        } catch (const std::exception & e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lines;
}

namespace {

struct PromptOutcome {
    PromptResult result;
    std::vector<TraceRecord> trace;
};

PromptResult measure_prompt(const PromptRecord & record, std::span<const TokenId> continuation,
                            const Embedder & embedder) {
    PromptResult result;
    result.id = record.id;
    result.tokens = continuation.size();
    const auto report = diversity(continuation);
    result.diversity = report.diversity;
    result.rep_2 = report.rep_n.at(2);
    result.rep_3 = report.rep_n.at(3);
    result.rep_4 = report.rep_n.at(4);
    result.coherence = coherence(record.prompt, continuation, embedder);
    return result;
}

void write_report_file(const std::filesystem::path & path, const RunReport & report) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write report file " + path.string());
    }
    {
        JsonLine header;
        header.str("type", "run")
            .str("method", report.method)
            .str("corpus", report.corpus)
            .str("backend", report.backend_name)
            .str("tool_version", report.tool_version)
            .str("created_at", report.created_at);
        out << header.finish() << '\n';
    }
    for (const auto & p : report.per_prompt) {
        if (p.failed) {
            JsonLine line;
            line.str("type", "error").str("id", p.id).str("message", p.error);
            out << line.finish() << '\n';
            continue;
        }
        JsonLine line;
        line.str("type", "prompt")
            .str("id", p.id)
            .integer("tokens", static_cast<long long>(p.tokens))
            .num("diversity", p.diversity)
            .num("rep_2", p.rep_2)
            .num("rep_3", p.rep_3)
            .num("rep_4", p.rep_4)
            .num("coherence", p.coherence)
            .opt_num("elapsed_seconds", p.elapsed_seconds)
            .opt_num("tokens_per_second", p.tokens_per_second);
        out << line.finish() << '\n';
    }
    {
        JsonLine line;
        line.str("type", "aggregate")
            .integer("prompts", static_cast<long long>(report.aggregate.prompts))
            .integer("failures", static_cast<long long>(report.aggregate.failures))
            .num("mean_diversity", report.aggregate.mean_diversity)
            .num("mean_coherence", report.aggregate.mean_coherence)
            .opt_num("mean_seconds_per_generation", report.aggregate.mean_seconds_per_generation)
            .opt_num("mean_tokens_per_second", report.aggregate.mean_tokens_per_second);
        out << line.finish() << '\n';
    }
}

void finish_aggregate(RunReport & report, bool with_speed) {
    double div_sum = 0.0;
    double coh_sum = 0.0;
    double sec_sum = 0.0;
    double tps_sum = 0.0;
    std::size_t ok = 0;
    for (const auto & p : report.per_prompt) {
        if (p.failed) {
            ++report.aggregate.failures;
            continue;
        }
        ++ok;
        div_sum += p.diversity;
        coh_sum += p.coherence;
        if (p.elapsed_seconds) {
            sec_sum += *p.elapsed_seconds;
        }
        if (p.tokens_per_second) {
            tps_sum += *p.tokens_per_second;
        }
    }
    report.aggregate.prompts = report.per_prompt.size();
    if (ok > 0) {
        report.aggregate.mean_diversity = div_sum / static_cast<double>(ok);
        report.aggregate.mean_coherence = coh_sum / static_cast<double>(ok);
        if (with_speed) {
            report.aggregate.mean_seconds_per_generation = sec_sum / static_cast<double>(ok);
            report.aggregate.mean_tokens_per_second = tps_sum / static_cast<double>(ok);
        }
    }
}

} // namespace

RunReport run_experiment(const RunManifest & manifest) {
    const auto backend = open_backend(manifest.backend);
    manifest.decoder.validate_for(backend->descriptor());
    const auto corpus = load_corpus(manifest.corpus_path);
    if (manifest.trace_path.empty() || manifest.report_path.empty()) {
        throw ArgumentError("manifest needs trace_out and report_out paths");
    }

    RunReport report;
    report.method = to_string(manifest.decoder.method);
    report.corpus = manifest.corpus_path.string();
    report.backend_name = backend->descriptor().name;
    report.tool_version =
        manifest.tool_version.empty() ? std::string(ACS_VERSION_STRING) : manifest.tool_version;
    report.created_at = manifest.created_at.empty() ? timestamp_utc() : manifest.created_at;

    MeanRepresentationEmbedder embedder(*backend);
    std::vector<PromptOutcome> outcomes(corpus.size());

    // a command backend owns a single duplex channel, so it cannot take
    // concurrent step calls; the synthetic backend is immutable and can
    std::size_t workers = std::max<std::size_t>(manifest.workers, 1);
    if (manifest.backend.type == "command") {
        workers = 1;
    }
    workers = std::min(workers, std::max<std::size_t>(corpus.size(), 1));

    std::atomic<std::size_t> cursor{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= corpus.size()) {
                return;
            }
            auto & outcome = outcomes[i];
            outcome.result.id = corpus[i].id;
            try {
                auto generated = generate(*backend, corpus[i].prompt, manifest.decoder);
                outcome.result = measure_prompt(corpus[i], generated.tokens, embedder);
                outcome.result.elapsed_seconds = generated.elapsed_seconds;
                outcome.result.tokens_per_second = generated.tokens_per_second;
                outcome.trace = std::move(generated.trace);
            } catch (const std::exception & e) {
                outcome.result.failed = true;
                outcome.result.error = e.what();
                outcome.trace.clear();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto & t : pool) {
            t.join();
        }
    }

    // single serializer: corpus order, then step order
    std::ofstream trace_out(manifest.trace_path);
    if (!trace_out) {
        throw ValidationError("cannot write trace file " + manifest.trace_path.string());
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const auto & record : outcomes[i].trace) {
            trace_out << trace_line_to_json({corpus[i].id, record}) << '\n';
        }
        report.per_prompt.push_back(std::move(outcomes[i].result));
    }
    trace_out.close();

    finish_aggregate(report, /*with_speed=*/true);
    write_report_file(manifest.report_path, report);
    return report;
}

RunReport recompute_report(const RunManifest & manifest) {
    const auto backend = open_backend(manifest.backend);
    const auto corpus = load_corpus(manifest.corpus_path);
    const auto trace = load_trace(manifest.trace_path);

    std::map<std::string, std::vector<TokenId>> continuations;
    for (const auto & line : trace) {
        continuations[line.id].push_back(line.record.chosen);
    }

    RunReport report;
    report.method = to_string(manifest.decoder.method);
    report.corpus = manifest.corpus_path.string();
    report.backend_name = backend->descriptor().name;
    report.tool_version = ACS_VERSION_STRING;
    report.created_at = timestamp_utc();

    MeanRepresentationEmbedder embedder(*backend);
    for (const auto & record : corpus) {
        PromptResult result;
        result.id = record.id;
        const auto it = continuations.find(record.id);
        if (it == continuations.end()) {
            result.failed = true;
            result.error = "no trace records for this prompt";
        } else {
            try {
                result = measure_prompt(record, it->second, embedder);
            } catch (const std::exception & e) {
                result.failed = true;
                result.error = e.what();
            }
        }
        report.per_prompt.push_back(std::move(result));
    }
    finish_aggregate(report, /*with_speed=*/false);
    return report;
}

RunReport load_report(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open report file " + path.string());
    }
    RunReport report;
    std::string raw;
    std::size_t line_no = 0;
    bool saw_aggregate = false;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.empty()) {
            continue;
        }
        try {
            const json j = json::parse(raw);
            const std::string type = j.at("type").get<std::string>();
            if (type == "run") {
                report.method = j.value("method", "");
                report.corpus = j.value("corpus", "");
                report.backend_name = j.value("backend", "");
                report.tool_version = j.value("tool_version", "");
                report.created_at = j.value("created_at", "");
            } else if (type == "prompt") {
                PromptResult p;
                p.id = j.at("id").get<std::string>();
                p.tokens = j.value("tokens", 0ull);
                p.diversity = j.at("diversity").get<double>();
                p.rep_2 = j.value("rep_2", 0.0);
                p.rep_3 = j.value("rep_3", 0.0);
                p.rep_4 = j.value("rep_4", 0.0);
                p.coherence = j.at("coherence").get<double>();
                if (j.contains("elapsed_seconds")) {
                    p.elapsed_seconds = j.at("elapsed_seconds").get<double>();
                }
                if (j.contains("tokens_per_second")) {
                    p.tokens_per_second = j.at("tokens_per_second").get<double>();
                }
                report.per_prompt.push_back(std::move(p));
            } else if (type == "error") {
                PromptResult p;
                p.id = j.at("id").get<std::string>();
                p.failed = true;
                p.error = j.value("message", "");
                report.per_prompt.push_back(std::move(p));
            } else if (type == "aggregate") {
                saw_aggregate = true;
                report.aggregate.prompts = j.value("prompts", 0ull);
                report.aggregate.failures = j.value("failures", 0ull);
                report.aggregate.mean_diversity = j.value("mean_diversity", 0.0);
                report.aggregate.mean_coherence = j.value("mean_coherence", 0.0);
                if (j.contains("mean_seconds_per_generation")) {
                    report.aggregate.mean_seconds_per_generation =
                        j.at("mean_seconds_per_generation").get<double>();
                }
                if (j.contains("mean_tokens_per_second")) {
                    report.aggregate.mean_tokens_per_second =
                        j.at("mean_tokens_per_second").get<double>();
                }
            } else {
                throw ValidationError("unknown report line type '" + type + "'");
            }
        } catch (const std::exception & e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_aggregate) {
        throw ValidationError(path.string() + ": missing aggregate line");
    }
    return report;
}

void save_report(const std::filesystem::path & path, const RunReport & report) {
    write_report_file(path, report);
}

ReportComparison compare_reports(const RunReport & a, const RunReport & b) {
    std::map<std::string, const PromptResult *> by_id;
    for (const auto & p : a.per_prompt) {
        by_id[p.id] = &p;
    }
    std::set<std::string> ids_b;
    for (const auto & p : b.per_prompt) {
        ids_b.insert(p.id);
    }
    if (by_id.size() != a.per_prompt.size() || ids_b.size() != b.per_prompt.size() ||
        by_id.size() != ids_b.size() ||
        !std::all_of(ids_b.begin(), ids_b.end(),
                     [&](const std::string & id) { return by_id.count(id) > 0; })) {
        throw ValidationError("reports cover different corpora");
    }

    ReportComparison cmp;
    std::size_t ok = 0;
    for (const auto & pb : b.per_prompt) {
        const auto & pa = *by_id.at(pb.id);
        if (pa.failed || pb.failed) {
            continue;
        }
        ++ok;
        cmp.diversity.mean_a += pa.diversity;
        cmp.diversity.mean_b += pb.diversity;
        cmp.coherence.mean_a += pa.coherence;
        cmp.coherence.mean_b += pb.coherence;
        const auto tally = [](MetricComparison & m, double va, double vb) {
            if (vb > va) {
                ++m.b_wins;
            } else if (va > vb) {
                ++m.a_wins;
            } else {
                ++m.ties;
            }
        };
        tally(cmp.diversity, pa.diversity, pb.diversity);
        tally(cmp.coherence, pa.coherence, pb.coherence);
    }
    cmp.prompts = ok;
    if (ok > 0) {
        const double inv = 1.0 / static_cast<double>(ok);
        cmp.diversity.mean_a *= inv;
        cmp.diversity.mean_b *= inv;
        cmp.coherence.mean_a *= inv;
        cmp.coherence.mean_b *= inv;
    }
    cmp.diversity.delta = cmp.diversity.mean_b - cmp.diversity.mean_a;
    cmp.coherence.delta = cmp.coherence.mean_b - cmp.coherence.mean_a;
    return cmp;
}

std::string format_comparison(const ReportComparison & cmp, const std::string & label_a,
                              const std::string & label_b) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %10s %8s %8s %6s\n", "metric",
                  label_a.substr(0, 12).c_str(), label_b.substr(0, 12).c_str(), "delta", "a_wins",
                  "b_wins", "ties");
    out << buf;
    const auto row = [&](const char * name, const MetricComparison & m) {
        std::snprintf(buf, sizeof(buf), "%-10s %12.6f %12.6f %+10.6f %8zu %8zu %6zu\n", name,
                      m.mean_a, m.mean_b, m.delta, m.a_wins, m.b_wins, m.ties);
        out << buf;
    };
    row("diversity", cmp.diversity);
    row("coherence", cmp.coherence);
    out << "prompts compared: " << cmp.prompts << '\n';
    return out.str();
}

std::string format_trace_table(std::span<const TraceLine> lines, const std::string & id_filter) {
    std::ostringstream out;
    out << "id\tstep\tchosen\tfull_entropy\ttopk_entropy\tdelta_t\tdelta_tk\tk_t\talpha_t"
           "\tmodel_confidence\tpenalty\n";
    const auto cell_d = [](const std::optional<double> & v) {
        return v ? fmt_double(*v) : std::string();
    };
    const auto cell_i = [](const std::optional<int> & v) {
        return v ? std::to_string(*v) : std::string();
    };
    for (const auto & line : lines) {
        if (!id_filter.empty() && line.id != id_filter) {
            continue;
        }
        out << line.id << '\t' << line.record.step << '\t' << line.record.chosen << '\t'
            << cell_d(line.record.full_entropy) << '\t' << cell_d(line.record.topk_entropy) << '\t'
            << cell_d(line.record.delta_t) << '\t' << cell_d(line.record.delta_tk) << '\t'
            << cell_i(line.record.k_t) << '\t' << cell_d(line.record.alpha_t) << '\t'
            << cell_d(line.record.model_confidence) << '\t' << cell_d(line.record.penalty) << '\n';
    }
    return out.str();
}

} // namespace acs
