#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acs/backend.hpp"
#include "acs/decode.hpp"
#include "acs/metrics.hpp"

namespace acs {

// One corpus entry: JSON line {"id": "...", "prompt": [ids], "reference": [ids]?}.
struct PromptRecord {
    std::string id;
    std::vector<TokenId> prompt;
    std::optional<std::vector<TokenId>> reference;
};

// Line-delimited JSON, order preserved, ids unique. A malformed line raises
// ValidationError carrying its 1-based line number.
std::vector<PromptRecord> load_corpus(const std::filesystem::path & path);
void save_corpus(const std::filesystem::path & path, std::span<const PromptRecord> records);

// How a manifest names its backend.
struct BackendSpec {
    std::string type = "synthetic"; // "synthetic" or "command"
    std::size_t vocab_size = 64;
    std::size_t hidden_dim = 256;
    std::uint64_t seed = 0;
    double repetition_bias = 0.0;
    std::string command; // type == "command": spawned via /bin/sh, line protocol
    bool binary = false; // command backend: use the float32 binary framing
};

std::unique_ptr<Backend> open_backend(const BackendSpec & spec);

// Everything needed to reproduce a run: backend, decoder, corpus and output
// paths. created_at is informational and excluded from determinism claims.
struct RunManifest {
    BackendSpec backend;
    DecoderConfig decoder;
    std::filesystem::path corpus_path;
    std::filesystem::path trace_path;
    std::filesystem::path report_path;
    std::size_t workers = 1;
    std::string created_at;
    std::string tool_version;
};

RunManifest load_manifest(const std::filesystem::path & path);
void save_manifest(const std::filesystem::path & path, const RunManifest & manifest);

// One trace file line: the prompt id plus one step's TraceRecord. Floats are
// serialized with 9 significant digits; fields a method does not compute are
// omitted from the line.
struct TraceLine {
    std::string id;
    TraceRecord record;
};

std::vector<TraceLine> load_trace(const std::filesystem::path & path);

struct PromptResult {
    std::string id;
    bool failed = false;
    std::string error;
    std::size_t tokens = 0;
    double diversity = 0.0;
    double rep_2 = 0.0;
    double rep_3 = 0.0;
    double rep_4 = 0.0;
    double coherence = 0.0;
    std::optional<double> elapsed_seconds;    // absent when recomputed from traces
    std::optional<double> tokens_per_second;
};

struct ReportAggregate {
    std::size_t prompts = 0;
    std::size_t failures = 0;
    double mean_diversity = 0.0;
    double mean_coherence = 0.0;
    std::optional<double> mean_seconds_per_generation;
    std::optional<double> mean_tokens_per_second;
};

struct RunReport {
    std::string method;
    std::string corpus;
    std::string backend_name;
    std::string tool_version;
    std::string created_at;
    std::vector<PromptResult> per_prompt;
    ReportAggregate aggregate;
};

// Decode every corpus prompt with the manifest's decoder, writing the trace
// and report files. Per-prompt failures are recorded in the report and
// skipped; the run itself only throws on configuration problems.
RunReport run_experiment(const RunManifest & manifest);

// Rebuild the report from the trace file and corpus alone (no decoding, no
// timing): reports are pure functions of traces.
RunReport recompute_report(const RunManifest & manifest);

RunReport load_report(const std::filesystem::path & path);
void save_report(const std::filesystem::path & path, const RunReport & report);

struct MetricComparison {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double delta = 0.0;   // b - a
    std::size_t a_wins = 0;
    std::size_t b_wins = 0;
    std::size_t ties = 0;
};

struct ReportComparison {
    std::size_t prompts = 0;
    MetricComparison diversity;
    MetricComparison coherence;
};

// Requires both reports to cover exactly the same prompt ids.
ReportComparison compare_reports(const RunReport & a, const RunReport & b);
std::string format_comparison(const ReportComparison & cmp, const std::string & label_a,
                              const std::string & label_b);

// Tab-separated per-step table of trace fields, optionally restricted to one
// prompt id. Ready for plotting entropy / k / alpha over time.
std::string format_trace_table(std::span<const TraceLine> lines, const std::string & id_filter);

} // namespace acs
