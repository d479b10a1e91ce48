#pragma once

#include "modelzip/model.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace modelzip {

// Frozen byte n-gram counts for orders 0..k.
struct NgramTables {
    std::size_t order = 0;
    double delta = 1.0;
    // levels[j]: context of the j preceding bytes -> counts of the next byte.
    std::vector<std::unordered_map<std::uint64_t, CountTable>> levels;
};

// Static byte n-gram with Laplace-delta smoothing. When the k-byte context
// was never seen in training it backs off to k-1, and so on down to order
// 0; near a chunk start only the available prefix is used.
class StaticNgramModel final : public Model {
public:
    explicit StaticNgramModel(std::shared_ptr<const NgramTables> tables);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t alphabet_size() const override { return 256; }
    [[nodiscard]] std::unique_ptr<Model> clone() const override;
    void probabilities(std::span<double> out) const override;
    [[nodiscard]] double log2_prob(Symbol s) const override;
    void quantized(int precision, QuantizedPmf& out) const override;

    [[nodiscard]] const NgramTables& tables() const noexcept { return *tables_; }
    // Order actually used for the next prediction.
    [[nodiscard]] std::size_t active_order() const;

    void save(const std::filesystem::path& path) const;
    static StaticNgramModel load(const std::filesystem::path& path);
    static std::vector<std::uint8_t> serialize(const NgramTables& tables);
    static std::shared_ptr<const NgramTables> deserialize(std::span<const std::uint8_t> bytes);

protected:
    void on_reset() override { refresh(); }
    void on_update(Symbol) override { refresh(); }

private:
    void refresh();

    std::shared_ptr<const NgramTables> tables_;
    const CountTable* current_ = nullptr;
    std::size_t current_order_ = 0;
    std::uint64_t current_key_ = 0;
    // Quantized tables per (order, context); tables are frozen so entries never go stale.
    mutable std::unordered_map<std::uint64_t, QuantizedPmf> pmf_cache_;
    mutable int cache_precision_ = 0;
};

std::shared_ptr<const NgramTables> train_static_ngram(std::span<const std::uint8_t> training, std::size_t order,
                                                      double delta = 1.0);

}  // namespace modelzip
