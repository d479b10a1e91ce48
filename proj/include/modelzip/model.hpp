#pragma once

#include "modelzip/quantized_pmf.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace modelzip {

// The conditioning prefix within the current chunk.
struct ModelContext {
    std::vector<Symbol> symbols_so_far;

    [[nodiscard]] std::size_t position() const noexcept { return symbols_so_far.size(); }
};

enum class OutputMode { metrics, codec };

struct ModelOutput {
    std::optional<std::vector<double>> log2_probs;
    std::optional<QuantizedPmf> quantized;
    std::optional<double> log2_prob_of_next;
};

// A sequential probability source over a finite alphabet. State is the
// symbols seen since the last reset(); reset() marks a chunk boundary.
class Model {
public:
    virtual ~Model() = default;

    [[nodiscard]] virtual std::string id() const = 0;
    [[nodiscard]] virtual std::size_t alphabet_size() const = 0;
    // Same parameters (and shared immutable tables), fresh chunk state.
    [[nodiscard]] virtual std::unique_ptr<Model> clone() const = 0;

    // Real-valued distribution of the next symbol; out.size() == alphabet_size().
    virtual void probabilities(std::span<double> out) const = 0;
    [[nodiscard]] virtual double log2_prob(Symbol s) const;
    virtual void quantized(int precision, QuantizedPmf& out) const;

    void reset();
    void update(Symbol s);

    [[nodiscard]] const ModelContext& context() const noexcept { return context_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    void set_capacity(std::size_t symbols) noexcept { capacity_ = symbols; }

protected:
    virtual void on_reset() {}
    virtual void on_update(Symbol) {}

private:
    ModelContext context_;
    std::size_t capacity_ = std::numeric_limits<std::size_t>::max();
};

// Metrics mode fills log2_probs (and log2_prob_of_next when `next` is
// given); codec mode fills quantized. Throws ContextOverflow at capacity.
ModelOutput next_distribution(const Model& model, OutputMode mode, int precision = kDefaultPrecision,
                              std::optional<Symbol> next = {});

class UniformModel final : public Model {
public:
    explicit UniformModel(std::size_t alphabet_size = 256);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t alphabet_size() const override { return alphabet_; }
    [[nodiscard]] std::unique_ptr<Model> clone() const override;
    void probabilities(std::span<double> out) const override;
    [[nodiscard]] double log2_prob(Symbol s) const override;
    void quantized(int precision, QuantizedPmf& out) const override;

private:
    std::size_t alphabet_;
    mutable QuantizedPmf cached_;
};

// Per-symbol occurrence counts for one context.
struct CountTable {
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;
};

// Packs the last `order` symbols (each < 2^16) into a key; the length is
// part of the key so contexts of different lengths never collide.
std::uint64_t context_key(std::span<const Symbol> history, std::size_t order);

// Online count model: P(x | ctx) = (c(ctx, x) + delta) / (n(ctx) + V * delta),
// counting only symbols since the last reset. delta = 1 is Laplace,
// delta = 0.5 is Krichevsky-Trofimov. Near a chunk start the context is
// whatever prefix exists.
class AdaptiveModel final : public Model {
public:
    AdaptiveModel(std::size_t alphabet_size = 256, std::size_t order = 0, double delta = 1.0);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t alphabet_size() const override { return alphabet_; }
    [[nodiscard]] std::unique_ptr<Model> clone() const override;
    void probabilities(std::span<double> out) const override;
    [[nodiscard]] double log2_prob(Symbol s) const override;
    void quantized(int precision, QuantizedPmf& out) const override;

    [[nodiscard]] std::size_t order() const noexcept { return order_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }

protected:
    void on_reset() override;
    void on_update(Symbol s) override;

private:
    void refresh_current();

    std::size_t alphabet_;
    std::size_t order_;
    double delta_;
    std::uint64_t delta_x2_;  // 2 * delta when that is an integer, else 0
    std::unordered_map<std::uint64_t, CountTable> tables_;
    const CountTable* current_ = nullptr;  // null: context never seen
    mutable QuantizedPmf fresh_pmf_;
    mutable int fresh_precision_ = 0;
};

}  // namespace modelzip
