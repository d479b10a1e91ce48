#include "modelzip/report_rows.hpp"

#include "modelzip/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <map>

namespace modelzip {

using nlohmann::json;

void ReportRow::set_metrics(const MetricsReport& r) {
    total_bits = r.total_bits;
    n_tokens = r.n_tokens;
    n_chars = r.n_chars;
    n_bytes = r.n_bytes;
    bpt = r.bpt;
    bpc = r.bpc;
    bpb = r.bpb;
    rate = r.rate;
    payload_bytes = r.payload_bytes;
}

MetricsReport ReportRow::metrics() const {
    return {total_bits, n_tokens, n_chars, n_bytes, bpt, bpc, bpb, rate, payload_bytes};
}

const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols{
        "model", "dataset", "year_month", "mode", "C",   "S",    "L",    "n_tokens",      "n_chars",
        "n_bytes", "bpt",   "bpc",        "bpb",  "rate", "payload_bytes", "bos_policy", "doc_id"};
    return cols;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    std::size_t i = 0;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        any = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            ++i;
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) end_record();
        } else {
            field += c;
            any = true;
        }
        ++i;
    }
    if (quoted) throw FormatError("csv: unterminated quoted field");
    if (any || !field.empty()) end_record();
    return records;
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& column) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw FormatError("column " + column + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

double parse_real(const std::string& s, const std::string& column) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("column " + column + ": expected a number, got '" + s + "'");
    }
}

std::vector<std::string> to_fields(const ReportRow& r) {
    return {r.model,
            r.dataset,
            r.year_month,
            r.mode,
            std::to_string(r.context),
            std::to_string(r.step),
            format_real(r.total_bits),
            std::to_string(r.n_tokens),
            std::to_string(r.n_chars),
            std::to_string(r.n_bytes),
            format_real(r.bpt),
            format_real(r.bpc),
            format_real(r.bpb),
            format_real(r.rate),
            r.payload_bytes ? std::to_string(*r.payload_bytes) : std::string(),
            r.bos_policy,
            r.doc_id};
}

ReportRow from_fields(const std::map<std::string, std::string>& f) {
    auto get = [&](const std::string& c) -> const std::string& {
        auto it = f.find(c);
        if (it == f.end()) throw FormatError("report row is missing column " + c);
        return it->second;
    };
    ReportRow r;
    r.model = get("model");
    r.dataset = get("dataset");
    r.year_month = get("year_month");
    r.mode = get("mode");
    r.context = parse_count(get("C"), "C");
    r.step = parse_count(get("S"), "S");
    r.total_bits = parse_real(get("L"), "L");
    r.n_tokens = parse_count(get("n_tokens"), "n_tokens");
    r.n_chars = parse_count(get("n_chars"), "n_chars");
    r.n_bytes = parse_count(get("n_bytes"), "n_bytes");
    r.bpt = parse_real(get("bpt"), "bpt");
    r.bpc = parse_real(get("bpc"), "bpc");
    r.bpb = parse_real(get("bpb"), "bpb");
    r.rate = parse_real(get("rate"), "rate");
    if (const auto& p = get("payload_bytes"); !p.empty()) r.payload_bytes = parse_count(p, "payload_bytes");
    r.bos_policy = get("bos_policy");
    if (auto it = f.find("doc_id"); it != f.end()) r.doc_id = it->second;
    return r;
}

}  // namespace

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::string out;
    auto append = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(fields[i]);
        }
        out += '\n';
    };
    append(report_columns());
    for (const auto& r : rows) append(to_fields(r));
    return out;
}

std::vector<ReportRow> rows_from_csv(std::string_view text) {
    auto records = parse_csv(text);
    if (records.empty()) throw FormatError("report CSV has no header");
    const auto& header = records.front();
    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != header.size())
            throw FormatError("report CSV line " + std::to_string(i + 1) + " has " +
                              std::to_string(records[i].size()) + " fields, header has " +
                              std::to_string(header.size()));
        std::map<std::string, std::string> fields;
        for (std::size_t c = 0; c < header.size(); ++c) fields[header[c]] = records[i][c];
        rows.push_back(from_fields(fields));
    }
    return rows;
}

std::string rows_to_jsonl(const std::vector<ReportRow>& rows) {
    std::string out;
    for (const auto& r : rows) {
        json j = json::object();
        j["model"] = r.model;
        j["dataset"] = r.dataset;
        j["year_month"] = r.year_month;
        j["mode"] = r.mode;
        j["C"] = r.context;
        j["S"] = r.step;
        j["L"] = r.total_bits;
        j["n_tokens"] = r.n_tokens;
        j["n_chars"] = r.n_chars;
        j["n_bytes"] = r.n_bytes;
        j["bpt"] = r.bpt;
        j["bpc"] = r.bpc;
        j["bpb"] = r.bpb;
        j["rate"] = r.rate;
        j["payload_bytes"] = r.payload_bytes ? json(*r.payload_bytes) : json(nullptr);
        j["bos_policy"] = r.bos_policy;
        if (!r.doc_id.empty()) j["doc_id"] = r.doc_id;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<ReportRow> rows_from_jsonl(std::string_view text) {
    std::vector<ReportRow> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json j = json::parse(line);
            ReportRow r;
            r.model = j.at("model").get<std::string>();
            r.dataset = j.at("dataset").get<std::string>();
            r.year_month = j.at("year_month").get<std::string>();
            r.mode = j.at("mode").get<std::string>();
            r.context = j.at("C").get<std::size_t>();
            r.step = j.at("S").get<std::size_t>();
            r.total_bits = j.at("L").get<double>();
            r.n_tokens = j.at("n_tokens").get<std::size_t>();
            r.n_chars = j.at("n_chars").get<std::size_t>();
            r.n_bytes = j.at("n_bytes").get<std::size_t>();
            r.bpt = j.at("bpt").get<double>();
            r.bpc = j.at("bpc").get<double>();
            r.bpb = j.at("bpb").get<double>();
            r.rate = j.at("rate").get<double>();
            if (!j.at("payload_bytes").is_null()) r.payload_bytes = j.at("payload_bytes").get<std::size_t>();
            r.bos_policy = j.at("bos_policy").get<std::string>();
            if (j.contains("doc_id")) r.doc_id = j.at("doc_id").get<std::string>();
            rows.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError("report JSONL line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ReportRow> parse_rows(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return rows_from_jsonl(text);
    return rows_from_csv(text);
}

}  // namespace modelzip
