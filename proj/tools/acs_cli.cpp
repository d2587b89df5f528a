// acs: decoding strategies (greedy, top-k, nucleus, typical, contrastive and
// adaptive contrastive search) over pluggable language-model backends, plus
// corpus experiments, metrics and per-step traces.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "acs/decode.hpp"
#include "acs/harness.hpp"
#include "acs/metrics.hpp"
#include "acs/protocol.hpp"
#include "acs/version.hpp"

namespace fs = std::filesystem;
using namespace acs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;

struct BackendFlags {
    std::string type = "synthetic";
    std::size_t vocab_size = 64;
    std::size_t hidden_dim = 256;
    std::uint64_t seed = 0;
    double repetition_bias = 0.0;
    std::string command;
    bool binary = false;

    void attach(CLI::App & app) {
        app.add_option("--backend", type, "backend type: synthetic or command")
            ->check(CLI::IsMember({"synthetic", "command"}))
            ->capture_default_str();
        app.add_option("--vocab-size", vocab_size, "synthetic vocabulary size")
            ->capture_default_str();
        app.add_option("--hidden-dim", hidden_dim, "synthetic representation width")
            ->capture_default_str();
        app.add_option("--backend-seed", seed, "synthetic backend seed")->capture_default_str();
        app.add_option("--repetition-bias", repetition_bias,
                       "mass placed on the most recent token, in [0,1]")
            ->capture_default_str();
        app.add_option("--backend-command", command,
                       "command bridged over the line protocol when --backend command");
        app.add_flag("--backend-binary", binary, "use float32 binary framing for step responses");
    }

    BackendSpec spec() const {
        BackendSpec s;
        s.type = type;
        s.vocab_size = vocab_size;
        s.hidden_dim = hidden_dim;
        s.seed = seed;
        s.repetition_bias = repetition_bias;
        s.command = command;
        s.binary = binary;
        return s;
    }
};

struct DecoderFlags {
    std::string method = "adaptive_contrastive";
    DecoderConfig config;

    void attach(CLI::App & app) {
        app.add_option("--method", method,
                       "greedy | top_k | nucleus | typical | contrastive | "
                       "adaptive_contrastive | adaptive_double_exp")
            ->capture_default_str();
        app.add_option("--k", config.k, "candidate pool for top_k / contrastive")
            ->capture_default_str();
        app.add_option("--alpha", config.alpha, "fixed contrastive penalty weight")
            ->capture_default_str();
        app.add_option("--p", config.p, "nucleus mass")->capture_default_str();
        app.add_option("--tau", config.tau, "typical mass")->capture_default_str();
        app.add_option("--q", config.q, "adaptive temperature")->capture_default_str();
        app.add_option("--max-new-tokens", config.max_new_tokens, "tokens to decode")
            ->capture_default_str();
        app.add_option("--seed", config.rng_seed, "sampling seed")->capture_default_str();
        app.add_option("--stop-tokens", config.stop_tokens, "token ids that end a generation")
            ->delimiter(',');
    }

    DecoderConfig resolved() const {
        DecoderConfig c = config;
        const auto parsed = decode_method_from_string(method);
        if (!parsed) {
            throw ArgumentError("unknown method '" + method + "'");
        }
        c.method = *parsed;
        return c;
    }
};

fs::path default_out_dir() {
    if (const char * dir = std::getenv("ACS_OUT_DIR")) {
        return fs::path(dir);
    }
    return fs::current_path();
}

void print_report_summary(const RunReport & report) {
    std::cout << "method: " << report.method << "\nprompts: " << report.aggregate.prompts
              << " (failures: " << report.aggregate.failures << ")"
              << "\nmean diversity: " << report.aggregate.mean_diversity
              << "\nmean coherence: " << report.aggregate.mean_coherence;
    if (report.aggregate.mean_seconds_per_generation) {
        std::cout << "\nmean seconds / generation: "
                  << *report.aggregate.mean_seconds_per_generation
                  << "\nmean tokens / second: " << *report.aggregate.mean_tokens_per_second;
    }
    std::cout << std::endl;
}

int run_generate(const BackendFlags & backend_flags, const DecoderFlags & decoder_flags,
                 const std::vector<TokenId> & prompt, const std::string & trace_path) {
    const auto backend = open_backend(backend_flags.spec());
    const auto config = decoder_flags.resolved();
    const auto result = generate(*backend, prompt, config);

    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
        std::cout << (i ? " " : "") << result.tokens[i];
    }
    std::cout << '\n';
    std::cerr << result.tokens.size() << " tokens in " << result.elapsed_seconds << " s ("
              << result.tokens_per_second << " tokens/s)\n";

    if (!trace_path.empty()) {
        // reuse the harness trace format with a fixed id
        std::vector<PromptRecord> corpus{{"prompt", prompt, std::nullopt}};
        RunManifest manifest;
        manifest.backend = backend_flags.spec();
        manifest.decoder = config;
        const auto dir = fs::path(trace_path).parent_path();
        const auto corpus_path =
            (dir.empty() ? fs::path(".") : dir) / ".acs_generate_corpus.jsonl";
        save_corpus(corpus_path, corpus);
        manifest.corpus_path = corpus_path;
        manifest.trace_path = trace_path;
        manifest.report_path = trace_path + ".report.jsonl";
        run_experiment(manifest);
        fs::remove(corpus_path);
        fs::remove(manifest.report_path);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"decoding strategy harness"};
    app.set_version_flag("--version", ACS_VERSION_STRING);
    app.require_subcommand(1);

    // generate
    auto * generate_cmd = app.add_subcommand("generate", "decode one prompt");
    BackendFlags gen_backend;
    DecoderFlags gen_decoder;
    std::vector<TokenId> gen_prompt;
    std::string gen_trace;
    gen_backend.attach(*generate_cmd);
    gen_decoder.attach(*generate_cmd);
    generate_cmd->add_option("--prompt", gen_prompt, "prompt token ids, comma separated")
        ->required()
        ->delimiter(',');
    generate_cmd->add_option("--trace-out", gen_trace, "write per-step trace records here");

    // run
    auto * run_cmd = app.add_subcommand("run", "decode a corpus and write trace + report");
    BackendFlags run_backend;
    DecoderFlags run_decoder;
    std::string run_config;
    std::string run_corpus;
    std::string run_trace;
    std::string run_report;
    std::string run_manifest_out;
    std::size_t run_workers = 1;
    run_backend.attach(*run_cmd);
    run_decoder.attach(*run_cmd);
    run_cmd->add_option("--config", run_config, "manifest JSON supplying defaults");
    auto * corpus_opt = run_cmd->add_option("--corpus", run_corpus, "prompt corpus (JSON lines)");
    run_cmd->add_option("--trace-out", run_trace, "trace output path");
    run_cmd->add_option("--report-out", run_report, "report output path");
    run_cmd->add_option("--manifest-out", run_manifest_out,
                        "where to write the effective manifest");
    run_cmd->add_option("--workers", run_workers, "parallel prompt workers")
        ->capture_default_str();

    // eval
    auto * eval_cmd = app.add_subcommand("eval", "recompute metrics from a trace file");
    std::string eval_manifest;
    std::string eval_report;
    eval_cmd->add_option("--manifest", eval_manifest, "manifest of the run to re-evaluate")
        ->required();
    eval_cmd->add_option("--report-out", eval_report, "recomputed report path");

    // compare
    auto * compare_cmd = app.add_subcommand("compare", "diff two reports over one corpus");
    std::string cmp_a;
    std::string cmp_b;
    compare_cmd->add_option("--a", cmp_a, "baseline report")->required();
    compare_cmd->add_option("--b", cmp_b, "candidate report")->required();

    // trace-dump
    auto * dump_cmd = app.add_subcommand("trace-dump", "per-step table from a trace file");
    std::string dump_trace;
    std::string dump_id;
    dump_cmd->add_option("--trace", dump_trace, "trace file")->required();
    dump_cmd->add_option("--id", dump_id, "restrict to one prompt id");

    // serve
    auto * serve_cmd = app.add_subcommand("serve", "answer the line protocol on stdio");
    BackendFlags serve_backend_flags;
    serve_backend_flags.attach(*serve_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (generate_cmd->parsed()) {
            return run_generate(gen_backend, gen_decoder, gen_prompt, gen_trace);
        }

        if (run_cmd->parsed()) {
            RunManifest manifest;
            if (!run_config.empty()) {
                manifest = load_manifest(run_config);
            }
            // flags win over the config file, which wins over defaults
            const auto backend_given = [&](const char * flag) {
                return run_cmd->count(flag) > 0;
            };
            if (run_config.empty() || backend_given("--backend") ||
                backend_given("--vocab-size") || backend_given("--hidden-dim") ||
                backend_given("--backend-seed") || backend_given("--repetition-bias") ||
                backend_given("--backend-command") || backend_given("--backend-binary")) {
                BackendSpec spec = manifest.backend;
                if (run_config.empty()) {
                    spec = run_backend.spec();
                } else {
                    if (backend_given("--backend")) spec.type = run_backend.type;
                    if (backend_given("--vocab-size")) spec.vocab_size = run_backend.vocab_size;
                    if (backend_given("--hidden-dim")) spec.hidden_dim = run_backend.hidden_dim;
                    if (backend_given("--backend-seed")) spec.seed = run_backend.seed;
                    if (backend_given("--repetition-bias"))
                        spec.repetition_bias = run_backend.repetition_bias;
                    if (backend_given("--backend-command")) spec.command = run_backend.command;
                    if (backend_given("--backend-binary")) spec.binary = run_backend.binary;
                }
                manifest.backend = spec;
            }
            {
                DecoderConfig base = manifest.decoder;
                if (run_config.empty()) {
                    base = run_decoder.resolved();
                } else {
                    if (run_cmd->count("--method")) {
                        base.method = run_decoder.resolved().method;
                    }
                    if (run_cmd->count("--k")) base.k = run_decoder.config.k;
                    if (run_cmd->count("--alpha")) base.alpha = run_decoder.config.alpha;
                    if (run_cmd->count("--p")) base.p = run_decoder.config.p;
                    if (run_cmd->count("--tau")) base.tau = run_decoder.config.tau;
                    if (run_cmd->count("--q")) base.q = run_decoder.config.q;
                    if (run_cmd->count("--max-new-tokens"))
                        base.max_new_tokens = run_decoder.config.max_new_tokens;
                    if (run_cmd->count("--seed")) base.rng_seed = run_decoder.config.rng_seed;
                    if (run_cmd->count("--stop-tokens"))
                        base.stop_tokens = run_decoder.config.stop_tokens;
                }
                manifest.decoder = base;
            }
            if (corpus_opt->count() > 0) {
                manifest.corpus_path = run_corpus;
            }
            if (run_cmd->count("--trace-out")) {
                manifest.trace_path = run_trace;
            }
            if (run_cmd->count("--workers")) {
                manifest.workers = run_workers;
            }
            if (run_cmd->count("--report-out")) {
                manifest.report_path = run_report;
            }
            if (manifest.corpus_path.empty()) {
                throw ArgumentError("a corpus is required (--corpus or --config)");
            }
            if (manifest.trace_path.empty()) {
                manifest.trace_path = default_out_dir() / "trace.jsonl";
            }
            if (manifest.report_path.empty()) {
                manifest.report_path = default_out_dir() / "report.jsonl";
            }
            manifest.tool_version = ACS_VERSION_STRING;

            const auto report = run_experiment(manifest);
            const fs::path manifest_out = run_manifest_out.empty()
                                              ? fs::path(manifest.report_path.string() + ".manifest.json")
                                              : fs::path(run_manifest_out);
            save_manifest(manifest_out, manifest);
            print_report_summary(report);
            std::cout << "trace: " << manifest.trace_path.string()
                      << "\nreport: " << manifest.report_path.string()
                      << "\nmanifest: " << manifest_out.string() << std::endl;
            return report.aggregate.failures == 0 ? kExitOk : kExitPartialFailure;
        }

        if (eval_cmd->parsed()) {
            const auto manifest = load_manifest(eval_manifest);
            const auto report = recompute_report(manifest);
            const fs::path out = eval_report.empty()
                                     ? fs::path(manifest.report_path.string() + ".eval.jsonl")
                                     : fs::path(eval_report);
            save_report(out, report);
            print_report_summary(report);
            std::cout << "report: " << out.string() << std::endl;
            return report.aggregate.failures == 0 ? kExitOk : kExitPartialFailure;
        }

        if (compare_cmd->parsed()) {
            const auto a = load_report(cmp_a);
            const auto b = load_report(cmp_b);
            const auto cmp = compare_reports(a, b);
            std::cout << format_comparison(cmp, a.method, b.method);
            return kExitOk;
        }

        if (dump_cmd->parsed()) {
            const auto trace = load_trace(dump_trace);
            std::cout << format_trace_table(trace, dump_id);
            return kExitOk;
        }

        if (serve_cmd->parsed()) {
            const auto backend = open_backend(serve_backend_flags.spec());
            serve_backend(*backend, std::cin, std::cout);
            return kExitOk;
        }
    } catch (const ArgumentError & e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const ValidationError & e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartialFailure;
    }
    return kExitOk;
}
