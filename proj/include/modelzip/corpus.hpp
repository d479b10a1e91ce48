#pragma once

#include "modelzip/year_month.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace modelzip {

enum class Modality { text, bytes };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);

struct ManifestEntry {
    std::string doc_id;  // path relative to the dataset root, '/'-separated
    std::string path;    // relative to the dataset root
    Modality modality = Modality::text;
    YearMonth year_month;
    std::uint64_t byte_size = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Index of a dataset laid out as <root>/YYYY-MM/<files>.
struct CorpusManifest {
    static constexpr int kSchemaVersion = 1;

    std::string dataset;
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;  // sorted by doc_id

    [[nodiscard]] std::vector<YearMonth> months() const;
    [[nodiscard]] std::string to_json() const;
    static CorpusManifest from_json(std::string_view json);
    void save(const std::filesystem::path& path) const;
    static CorpusManifest load(const std::filesystem::path& path);

    friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

struct Document {
    std::string doc_id;
    Modality modality = Modality::text;
    YearMonth year_month;
    std::vector<std::uint8_t> bytes;
};

// Extension table: .txt .md .tex -> text; .bin .raw -> bytes. Files whose
// name starts with '.' are ignored; anything else that does not parse is an
// error naming the path. `dataset` defaults to the directory name.
CorpusManifest ingest(const std::filesystem::path& root, std::string dataset = {});

// Documents of one month in doc_id order, sizes verified and text checked
// to be UTF-8.
std::vector<Document> load_bucket(const CorpusManifest& manifest, YearMonth month);

}  // namespace modelzip
