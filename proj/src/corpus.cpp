#include "modelzip/corpus.hpp"

#include "modelzip/error.hpp"
#include "modelzip/io.hpp"

#include <algorithm>
#include <json.hpp>
#include <optional>
#include <set>

namespace modelzip {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Modality m) { return m == Modality::text ? "text" : "bytes"; }

Modality parse_modality(std::string_view s) {
    if (s == "text") return Modality::text;
    if (s == "bytes") return Modality::bytes;
    throw InvalidArgument("unknown modality '" + std::string(s) + "'");
}

namespace {

std::optional<Modality> modality_for(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".txt" || ext == ".md" || ext == ".tex") return Modality::text;
    if (ext == ".bin" || ext == ".raw") return Modality::bytes;
    return std::nullopt;
}

}  // namespace

std::vector<YearMonth> CorpusManifest::months() const {
    std::set<YearMonth> s;
    for (const auto& e : entries) s.insert(e.year_month);
    return {s.begin(), s.end()};
}

std::string CorpusManifest::to_json() const {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["dataset"] = dataset;
    j["root"] = root.string();
    j["entries"] = json::array();
    for (const auto& e : entries) {
        j["entries"].push_back({{"doc_id", e.doc_id},
                                {"path", e.path},
                                {"modality", to_string(e.modality)},
                                {"year_month", e.year_month.to_string()},
                                {"byte_size", e.byte_size}});
    }
    return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw FormatError("unsupported manifest schema version " + j.at("schema_version").dump());
        CorpusManifest m;
        m.dataset = j.at("dataset").get<std::string>();
        m.root = j.at("root").get<std::string>();
        std::set<std::string> ids;
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.doc_id = e.at("doc_id").get<std::string>();
            entry.path = e.at("path").get<std::string>();
            entry.modality = parse_modality(e.at("modality").get<std::string>());
            entry.year_month = YearMonth::parse(e.at("year_month").get<std::string>());
            entry.byte_size = e.at("byte_size").get<std::uint64_t>();
            if (!ids.insert(entry.doc_id).second) throw FormatError("duplicate doc_id '" + entry.doc_id + "'");
            m.entries.push_back(std::move(entry));
        }
        std::sort(m.entries.begin(), m.entries.end(),
                  [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

void CorpusManifest::save(const fs::path& path) const { write_file_atomic(path, to_json()); }

CorpusManifest CorpusManifest::load(const fs::path& path) {
    auto m = from_json(read_text_file(path));
    // A relative root is relative to the manifest file.
    if (m.root.is_relative()) m.root = path.parent_path() / m.root;
    return m;
}

CorpusManifest ingest(const fs::path& root, std::string dataset) {
    if (!fs::is_directory(root)) throw InvalidArgument("not a directory: " + root.string());
    CorpusManifest m;
    m.root = root;
    m.dataset = std::move(dataset);
    if (m.dataset.empty()) {
        auto normal = fs::absolute(root).lexically_normal();
        if (normal.filename().empty()) normal = normal.parent_path();  // trailing slash
        m.dataset = normal.filename().string();
    }
    std::set<std::string> ids;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        const auto name = it->path().filename().string();
        if (!name.empty() && name[0] == '.') {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (!it->is_regular_file()) continue;
        const auto rel = fs::relative(it->path(), root);
        auto first = rel.begin();
        if (std::distance(rel.begin(), rel.end()) < 2)
            throw InvalidArgument("file outside a YYYY-MM directory: " + it->path().string());
        YearMonth month;
        try {
            month = YearMonth::parse(first->string());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(it->path().string() + ": " + e.what());
        }
        auto modality = modality_for(it->path());
        if (!modality) throw InvalidArgument("unknown file extension: " + it->path().string());
        ManifestEntry e;
        e.doc_id = rel.generic_string();
        e.path = e.doc_id;
        e.modality = *modality;
        e.year_month = month;
        e.byte_size = fs::file_size(it->path());
        if (!ids.insert(e.doc_id).second) throw InvalidArgument("duplicate doc id " + e.doc_id);
        m.entries.push_back(std::move(e));
    }
    std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
    return m;
}

std::vector<Document> load_bucket(const CorpusManifest& manifest, YearMonth month) {
    std::vector<Document> docs;
    bool found = false;
    for (const auto& e : manifest.entries) {
        if (e.year_month != month) continue;
        found = true;
        const auto path = manifest.root / e.path;
        if (!fs::exists(path)) throw IntegrityError("missing file " + path.string());
        Document d;
        d.doc_id = e.doc_id;
        d.modality = e.modality;
        d.year_month = e.year_month;
        d.bytes = read_file(path);
        if (d.bytes.size() != e.byte_size)
            throw IntegrityError("size mismatch for " + path.string() + ": manifest says " +
                                 std::to_string(e.byte_size) + " bytes, file has " + std::to_string(d.bytes.size()));
        if (d.modality == Modality::text && !is_valid_utf8(d.bytes))
            throw IntegrityError("text document is not valid UTF-8: " + path.string());
        docs.push_back(std::move(d));
    }
    if (!found) throw InvalidArgument("no documents for month " + month.to_string());
    return docs;
}

}  // namespace modelzip
