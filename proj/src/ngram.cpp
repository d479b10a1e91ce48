#include "modelzip/ngram.hpp"

#include "modelzip/error.hpp"
#include "modelzip/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace modelzip {

std::shared_ptr<const NgramTables> train_static_ngram(std::span<const std::uint8_t> training, std::size_t order,
                                                      double delta) {
    if (order > 3) throw InvalidArgument("n-gram order must be in [0, 3]");
    if (training.empty()) throw InvalidArgument("n-gram training data is empty");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("smoothing delta must be positive");
    auto t = std::make_shared<NgramTables>();
    t->order = order;
    t->delta = delta;
    t->levels.resize(order + 1);
    std::vector<Symbol> history(training.begin(), training.end());
    for (std::size_t j = 0; j <= order; ++j) {
        for (std::size_t i = j; i < history.size(); ++i) {
            auto key = context_key(std::span(history).subspan(i - j, j), j);
            auto& table = t->levels[j][key];
            if (table.counts.empty()) table.counts.assign(256, 0);
            ++table.counts[history[i]];
            ++table.total;
        }
    }
    return t;
}

StaticNgramModel::StaticNgramModel(std::shared_ptr<const NgramTables> tables) : tables_(std::move(tables)) {
    if (!tables_ || tables_->levels.empty() || tables_->levels[0].empty())
        throw InvalidArgument("n-gram model is not trained");
    refresh();
}

std::string StaticNgramModel::id() const {
    // FNV-1a over the dump, so archives name the exact tables they need.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : serialize(*tables_)) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << "ngram:" << tables_->order << ':' << tables_->delta << '@' << std::hex << h;
    return os.str();
}

std::unique_ptr<Model> StaticNgramModel::clone() const {
    auto m = std::make_unique<StaticNgramModel>(tables_);
    m->set_capacity(capacity());
    return m;
}

void StaticNgramModel::refresh() {
    const auto& history = context().symbols_so_far;
    for (std::size_t j = std::min(tables_->order, history.size()) + 1; j-- > 0;) {
        const auto key = context_key(history, j);
        const auto& level = tables_->levels[j];
        auto it = level.find(key);
        if (it != level.end()) {
            current_ = &it->second;
            current_order_ = j;
            current_key_ = key;
            return;
        }
    }
    throw InvalidArgument("n-gram model is not trained");
}

std::size_t StaticNgramModel::active_order() const { return current_order_; }

void StaticNgramModel::probabilities(std::span<double> out) const {
    const double delta = tables_->delta;
    const double denom = static_cast<double>(current_->total) + 256.0 * delta;
    for (std::size_t i = 0; i < 256; ++i) out[i] = (current_->counts[i] + delta) / denom;
}

double StaticNgramModel::log2_prob(Symbol s) const {
    const double delta = tables_->delta;
    return std::log2(current_->counts.at(s) + delta) - std::log2(static_cast<double>(current_->total) + 256.0 * delta);
}

void StaticNgramModel::quantized(int precision, QuantizedPmf& out) const {
    if (cache_precision_ != precision) {
        pmf_cache_.clear();
        cache_precision_ = precision;
    }
    // Context keys use at most 52 bits; the order goes in the top nibble.
    const std::uint64_t slot = (std::uint64_t{current_order_} << 60) ^ current_key_;
    auto it = pmf_cache_.find(slot);
    if (it == pmf_cache_.end()) {
        QuantizedPmf q;
        const double twice = 2.0 * tables_->delta;
        if (twice == std::floor(twice) && twice <= 1024.0) {
            std::vector<std::uint64_t> w(256);
            for (std::size_t i = 0; i < 256; ++i)
                w[i] = 2 * std::uint64_t{current_->counts[i]} + static_cast<std::uint64_t>(twice);
            quantize_weights_into(w, precision, q);
        } else {
            Model::quantized(precision, q);
        }
        it = pmf_cache_.emplace(slot, std::move(q)).first;
    }
    out = it->second;
}

// Dump layout (little-endian):
//   "MZNG" | u8 version=1 | u8 order | f64 delta (IEEE-754 bits)
//   | per level j = 0..order: u32 context count
//     | per context, ascending key: u64 key | 256 x u32 counts
std::vector<std::uint8_t> StaticNgramModel::serialize(const NgramTables& t) {
    std::vector<std::uint8_t> out{'M', 'Z', 'N', 'G', 1, static_cast<std::uint8_t>(t.order)};
    auto put = [&](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put(std::bit_cast<std::uint64_t>(t.delta), 8);
    for (const auto& level : t.levels) {
        std::vector<std::uint64_t> keys;
        for (const auto& [k, _] : level) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        put(keys.size(), 4);
        for (auto k : keys) {
            put(k, 8);
            for (auto c : level.at(k).counts) put(c, 4);
        }
    }
    return out;
}

std::shared_ptr<const NgramTables> StaticNgramModel::deserialize(std::span<const std::uint8_t> in) {
    std::size_t pos = 0;
    auto get = [&](int bytes) {
        if (in.size() - pos < static_cast<std::size_t>(bytes)) throw FormatError("n-gram dump truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in[pos + i]} << (8 * i);
        pos += bytes;
        return v;
    };
    if (in.size() < 6 || std::memcmp(in.data(), "MZNG", 4) != 0) throw FormatError("not an n-gram dump");
    pos = 4;
    if (get(1) != 1) throw FormatError("unsupported n-gram dump version");
    auto t = std::make_shared<NgramTables>();
    t->order = get(1);
    if (t->order > 3) throw FormatError("n-gram dump order out of range");
    t->delta = std::bit_cast<double>(get(8));
    t->levels.resize(t->order + 1);
    for (auto& level : t->levels) {
        auto n = get(4);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto key = get(8);
            CountTable table;
            table.counts.resize(256);
            for (auto& c : table.counts) {
                c = static_cast<std::uint32_t>(get(4));
                table.total += c;
            }
            level.emplace(key, std::move(table));
        }
    }
    if (pos != in.size()) throw FormatError("trailing bytes in n-gram dump");
    return t;
}

void StaticNgramModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize(*tables_)); }

StaticNgramModel StaticNgramModel::load(const std::filesystem::path& path) {
    return StaticNgramModel(deserialize(read_file(path)));
}

}  // namespace modelzip
