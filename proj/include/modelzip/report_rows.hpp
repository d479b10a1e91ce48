#pragma once

#include "modelzip/harness.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modelzip {

// One result line. Document rows carry a doc_id; month rows leave it empty.
struct ReportRow {
    std::string model;
    std::string dataset;
    std::string year_month;
    std::string mode;
    std::size_t context = 0;
    std::size_t step = 0;
    double total_bits = 0.0;
    std::size_t n_tokens = 0;
    std::size_t n_chars = 0;
    std::size_t n_bytes = 0;
    double bpt = 0.0;
    double bpc = 0.0;
    double bpb = 0.0;
    double rate = 0.0;
    std::optional<std::size_t> payload_bytes;
    std::string bos_policy = "none";
    std::string doc_id;

    [[nodiscard]] bool is_month_row() const noexcept { return doc_id.empty(); }
    void set_metrics(const MetricsReport& r);
    [[nodiscard]] MetricsReport metrics() const;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// Column order of both serializations.
const std::vector<std::string>& report_columns();

// RFC 4180 CSV with a header line; reals printed with 17 significant digits.
std::string rows_to_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_csv(std::string_view text);
std::string rows_to_jsonl(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_jsonl(std::string_view text);
// Picks the parser from the first non-blank character.
std::vector<ReportRow> parse_rows(std::string_view text);

// Minimal CSV helpers shared with the temporal report.
std::string csv_escape(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string format_real(double v);

}  // namespace modelzip
