#pragma once

#include "modelzip/report_rows.hpp"
#include "modelzip/year_month.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace modelzip {

struct MonthlyPoint {
    YearMonth month;
    double rate = 0.0;

    friend bool operator==(const MonthlyPoint&, const MonthlyPoint&) = default;
};

// Per model x dataset; months strictly increasing.
class MonthlySeries {
public:
    MonthlySeries() = default;
    // Sorts the points; duplicate months and non-positive rates are rejected.
    MonthlySeries(std::string model, std::string dataset, std::vector<MonthlyPoint> points);

    [[nodiscard]] const std::string& model() const noexcept { return model_; }
    [[nodiscard]] const std::string& dataset() const noexcept { return dataset_; }
    [[nodiscard]] const std::vector<MonthlyPoint>& points() const noexcept { return points_; }
    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] double mean_rate() const;

    friend bool operator==(const MonthlySeries&, const MonthlySeries&) = default;

private:
    std::string model_;
    std::string dataset_;
    std::vector<MonthlyPoint> points_;
};

// Train holds months <= cutoff, test the rest. Throws when either is empty.
std::pair<MonthlySeries, MonthlySeries> split_by_cutoff(const MonthlySeries& series, YearMonth cutoff);

struct TemporalSummary {
    std::string model;
    std::string dataset;
    YearMonth cutoff;
    std::size_t n_train_months = 0;
    std::size_t n_test_months = 0;
    double rate_train = 0.0;
    double rate_test = 0.0;
    double rate_avg = 0.0;  // over all months
    double gap = 0.0;       // rate_test - rate_train
    double rate_future_estimate = 0.0;  // rate_test + gap

    friend bool operator==(const TemporalSummary&, const TemporalSummary&) = default;
};

// Unweighted means over months.
TemporalSummary summarize(const MonthlySeries& series, YearMonth cutoff);

// Training-period mean implied by a published all-months mean and
// testing-period mean with the given month counts.
double reconstruct_train_mean(double rate_avg, double rate_test, std::size_t n_train, std::size_t n_test);

// Percent with three decimals, e.g. 0.07758 -> "7.758".
std::string format_percent(double rate);
// Signed percent gap with the leading zero dropped, e.g. 0.00219 -> "+.219".
std::string format_gap(double gap);
// "↑" for a positive gap, "↓" for a negative one, empty when zero.
std::string_view gap_arrow(double gap);

// One series per (model, dataset), sorted. Month rows supply the rate
// directly; months that only have document rows are pooled by bytes.
std::vector<MonthlySeries> series_from_rows(const std::vector<ReportRow>& rows);

std::string summaries_to_csv(const std::vector<TemporalSummary>& summaries);
std::vector<TemporalSummary> summaries_from_csv(std::string_view text);
std::string summaries_to_json(const std::vector<TemporalSummary>& summaries,
                              const std::vector<MonthlySeries>& series);
std::string series_to_csv(const std::vector<MonthlySeries>& series, YearMonth cutoff);

// Writes summary.csv, summary.json and series.csv into `dir`, ordered by
// (model, dataset).
void emit_report(std::vector<TemporalSummary> summaries, std::vector<MonthlySeries> series, YearMonth cutoff,
                 const std::filesystem::path& dir);

}  // namespace modelzip
