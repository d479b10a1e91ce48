#include "modelzip/temporal.hpp"

#include "modelzip/error.hpp"
#include "modelzip/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace modelzip {

using nlohmann::json;

namespace {

constexpr const char* kWeighting = "unweighted_month_mean";

bool by_key(const auto& a, const auto& b) {
    return std::tie(a.model, a.dataset) < std::tie(b.model, b.dataset);
}

}  // namespace

MonthlySeries::MonthlySeries(std::string model, std::string dataset, std::vector<MonthlyPoint> points)
    : model_(std::move(model)), dataset_(std::move(dataset)), points_(std::move(points)) {
    std::sort(points_.begin(), points_.end(), [](const auto& a, const auto& b) { return a.month < b.month; });
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i].rate > 0.0) || !std::isfinite(points_[i].rate))
            throw InvalidArgument("series " + model_ + "/" + dataset_ + ": rate for " +
                                  points_[i].month.to_string() + " must be positive");
        if (i > 0 && points_[i].month == points_[i - 1].month)
            throw InvalidArgument("series " + model_ + "/" + dataset_ + ": duplicate month " +
                                  points_[i].month.to_string());
    }
}

double MonthlySeries::mean_rate() const {
    if (points_.empty()) throw InvalidArgument("mean of an empty series");
    // Shifted by the first rate so that a constant series has an exact mean.
    const double base = points_.front().rate;
    double sum = 0.0;
    for (const auto& p : points_) sum += p.rate - base;
    return base + sum / static_cast<double>(points_.size());
}

std::pair<MonthlySeries, MonthlySeries> split_by_cutoff(const MonthlySeries& series, YearMonth cutoff) {
    std::vector<MonthlyPoint> train, test;
    for (const auto& p : series.points()) (p.month <= cutoff ? train : test).push_back(p);
    const std::string what = "series " + series.model() + "/" + series.dataset() + " with cutoff " + cutoff.to_string();
    if (train.empty()) throw InvalidArgument(what + " has no training-period months");
    if (test.empty()) throw InvalidArgument(what + " has no testing-period months");
    return {MonthlySeries(series.model(), series.dataset(), std::move(train)),
            MonthlySeries(series.model(), series.dataset(), std::move(test))};
}

TemporalSummary summarize(const MonthlySeries& series, YearMonth cutoff) {
    auto [train, test] = split_by_cutoff(series, cutoff);
    TemporalSummary s;
    s.model = series.model();
    s.dataset = series.dataset();
    s.cutoff = cutoff;
    s.n_train_months = train.points().size();
    s.n_test_months = test.points().size();
    s.rate_train = train.mean_rate();
    s.rate_test = test.mean_rate();
    s.rate_avg = series.mean_rate();
    s.gap = s.rate_test - s.rate_train;
    s.rate_future_estimate = s.rate_test + s.gap;
    return s;
}

double reconstruct_train_mean(double rate_avg, double rate_test, std::size_t n_train, std::size_t n_test) {
    if (n_train == 0) throw InvalidArgument("training period must have at least one month");
    const double total = static_cast<double>(n_train + n_test);
    return (total * rate_avg - static_cast<double>(n_test) * rate_test) / static_cast<double>(n_train);
}

std::string format_percent(double rate) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", rate * 100.0);
    return buf;
}

std::string format_gap(double gap) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.3f", gap * 100.0);
    std::string s = buf;
    // "+0.219" -> "+.219"
    if (s.size() > 2 && s[1] == '0' && s[2] == '.') s.erase(1, 1);
    if (s == "-.000") s = "+.000";
    return s;
}

std::string_view gap_arrow(double gap) {
    if (gap > 0.0) return "↑";
    if (gap < 0.0) return "↓";
    return "";
}

std::vector<MonthlySeries> series_from_rows(const std::vector<ReportRow>& rows) {
    using Key = std::pair<std::string, std::string>;
    std::map<Key, std::map<YearMonth, double>> month_rates;
    std::map<Key, std::map<YearMonth, std::vector<MetricsReport>>> doc_reports;
    for (const auto& r : rows) {
        const Key key{r.model, r.dataset};
        const auto month = YearMonth::parse(r.year_month);
        if (r.is_month_row()) {
            if (!month_rates[key].emplace(month, r.rate).second)
                throw InvalidArgument("duplicate month row " + r.model + "/" + r.dataset + "/" + r.year_month);
        } else {
            doc_reports[key][month].push_back(r.metrics());
        }
    }
    for (auto& [key, months] : doc_reports)
        for (auto& [month, reports] : months)
            if (!month_rates[key].contains(month)) month_rates[key][month] = aggregate(reports).rate;

    std::vector<MonthlySeries> out;
    for (auto& [key, months] : month_rates) {
        std::vector<MonthlyPoint> points;
        for (auto& [m, rate] : months) points.push_back({m, rate});
        out.emplace_back(key.first, key.second, std::move(points));
    }
    return out;
}

namespace {

const std::vector<std::string> kSummaryColumns{
    "model",    "dataset", "cutoff", "n_train_months", "n_test_months", "rate_train", "rate_test", "rate_avg",
    "gap",      "rate_future_estimate", "avg_pct", "test_pct", "gap_pct", "arrow", "future_pct", "weighting"};

}  // namespace

std::string summaries_to_csv(const std::vector<TemporalSummary>& summaries) {
    std::string out;
    auto append = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(fields[i]);
        }
        out += '\n';
    };
    append(kSummaryColumns);
    for (const auto& s : summaries)
        append({s.model, s.dataset, s.cutoff.to_string(), std::to_string(s.n_train_months),
                std::to_string(s.n_test_months), format_real(s.rate_train), format_real(s.rate_test),
                format_real(s.rate_avg), format_real(s.gap), format_real(s.rate_future_estimate),
                format_percent(s.rate_avg), format_percent(s.rate_test), format_gap(s.gap),
                std::string(gap_arrow(s.gap)), format_percent(s.rate_future_estimate), kWeighting});
    return out;
}

std::vector<TemporalSummary> summaries_from_csv(std::string_view text) {
    const auto records = parse_csv(text);
    if (records.empty() || records.front() != kSummaryColumns) throw FormatError("summary CSV header mismatch");
    std::vector<TemporalSummary> out;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != kSummaryColumns.size())
            throw FormatError("summary CSV line " + std::to_string(i + 1) + " has the wrong field count");
        try {
            TemporalSummary s;
            s.model = f[0];
            s.dataset = f[1];
            s.cutoff = YearMonth::parse(f[2]);
            s.n_train_months = std::stoull(f[3]);
            s.n_test_months = std::stoull(f[4]);
            s.rate_train = std::stod(f[5]);
            s.rate_test = std::stod(f[6]);
            s.rate_avg = std::stod(f[7]);
            s.gap = std::stod(f[8]);
            s.rate_future_estimate = std::stod(f[9]);
            out.push_back(std::move(s));
        } catch (const std::logic_error&) {
            throw FormatError("summary CSV line " + std::to_string(i + 1) + " has a malformed number");
        }
    }
    return out;
}

std::string summaries_to_json(const std::vector<TemporalSummary>& summaries,
                              const std::vector<MonthlySeries>& series) {
    json j;
    j["weighting"] = kWeighting;
    j["summaries"] = json::array();
    for (const auto& s : summaries) {
        j["summaries"].push_back({{"model", s.model},
                                  {"dataset", s.dataset},
                                  {"cutoff", s.cutoff.to_string()},
                                  {"n_train_months", s.n_train_months},
                                  {"n_test_months", s.n_test_months},
                                  {"rate_train", s.rate_train},
                                  {"rate_test", s.rate_test},
                                  {"rate_avg", s.rate_avg},
                                  {"gap", s.gap},
                                  {"rate_future_estimate", s.rate_future_estimate},
                                  {"gap_pct", format_gap(s.gap)},
                                  {"arrow", gap_arrow(s.gap)}});
    }
    j["series"] = json::array();
    for (const auto& ser : series) {
        json points = json::array();
        for (const auto& p : ser.points()) points.push_back({{"year_month", p.month.to_string()}, {"rate", p.rate}});
        j["series"].push_back({{"model", ser.model()}, {"dataset", ser.dataset()}, {"points", std::move(points)}});
    }
    return j.dump(2) + "\n";
}

std::string series_to_csv(const std::vector<MonthlySeries>& series, YearMonth cutoff) {
    std::string out = "model,dataset,year_month,rate,period\n";
    for (const auto& s : series)
        for (const auto& p : s.points())
            out += csv_escape(s.model()) + ',' + csv_escape(s.dataset()) + ',' + p.month.to_string() + ',' +
                   format_real(p.rate) + ',' + (p.month <= cutoff ? "train" : "test") + '\n';
    return out;
}

void emit_report(std::vector<TemporalSummary> summaries, std::vector<MonthlySeries> series, YearMonth cutoff,
                 const std::filesystem::path& dir) {
    if (summaries.empty()) throw InvalidArgument("no summaries to report");
    std::sort(summaries.begin(), summaries.end(), by_key<TemporalSummary, TemporalSummary>);
    std::sort(series.begin(), series.end(), [](const MonthlySeries& a, const MonthlySeries& b) {
        return std::tie(a.model(), a.dataset()) < std::tie(b.model(), b.dataset());
    });
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "summary.csv", summaries_to_csv(summaries));
    write_file_atomic(dir / "summary.json", summaries_to_json(summaries, series));
    write_file_atomic(dir / "series.csv", series_to_csv(series, cutoff));
}

}  // namespace modelzip
