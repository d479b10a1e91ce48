#include "modelzip/model.hpp"

#include "modelzip/error.hpp"

#include <cmath>
#include <sstream>

namespace modelzip {

double Model::log2_prob(Symbol s) const {
    std::vector<double> p(alphabet_size());
    probabilities(p);
    return std::log2(p.at(s));
}

void Model::quantized(int precision, QuantizedPmf& out) const {
    thread_local std::vector<double> p;
    p.resize(alphabet_size());
    probabilities(p);
    quantize_pmf_into(p, precision, out);
}

void Model::reset() {
    context_.symbols_so_far.clear();
    on_reset();
}

void Model::update(Symbol s) {
    if (s >= alphabet_size())
        throw InvalidArgument("symbol " + std::to_string(s) + " outside alphabet of " +
                              std::to_string(alphabet_size()));
    if (context_.position() >= capacity_)
        throw ContextOverflow("context of " + std::to_string(capacity_) + " symbols exceeded");
    context_.symbols_so_far.push_back(s);
    on_update(s);
}

ModelOutput next_distribution(const Model& model, OutputMode mode, int precision, std::optional<Symbol> next) {
    if (model.context().position() >= model.capacity())
        throw ContextOverflow("context of " + std::to_string(model.capacity()) + " symbols exceeded");
    ModelOutput out;
    if (mode == OutputMode::metrics) {
        std::vector<double> p(model.alphabet_size());
        model.probabilities(p);
        for (auto& v : p) v = std::log2(v);
        if (next) out.log2_prob_of_next = p.at(*next);
        out.log2_probs = std::move(p);
    } else {
        QuantizedPmf q;
        model.quantized(precision, q);
        if (next) out.log2_prob_of_next = -q.bits(*next);
        out.quantized = std::move(q);
    }
    return out;
}

UniformModel::UniformModel(std::size_t alphabet_size) : alphabet_(alphabet_size) {
    if (alphabet_ < 2) throw InvalidArgument("uniform model needs at least 2 symbols");
}

std::string UniformModel::id() const { return alphabet_ == 256 ? "uniform" : "uniform:" + std::to_string(alphabet_); }

std::unique_ptr<Model> UniformModel::clone() const { return std::make_unique<UniformModel>(alphabet_); }

void UniformModel::probabilities(std::span<double> out) const {
    for (auto& v : out) v = 1.0 / static_cast<double>(alphabet_);
}

double UniformModel::log2_prob(Symbol) const { return -std::log2(static_cast<double>(alphabet_)); }

void UniformModel::quantized(int precision, QuantizedPmf& out) const {
    if (cached_.precision() != precision || cached_.alphabet_size() != alphabet_) {
        std::vector<std::uint64_t> w(alphabet_, 1);
        quantize_weights_into(w, precision, cached_);
    }
    out = cached_;
}

std::uint64_t context_key(std::span<const Symbol> history, std::size_t order) {
    const std::size_t len = std::min(order, history.size());
    std::uint64_t key = len;
    for (std::size_t i = history.size() - len; i < history.size(); ++i) key = (key << 16) | (history[i] & 0xFFFFu);
    return key;
}

AdaptiveModel::AdaptiveModel(std::size_t alphabet_size, std::size_t order, double delta)
    : alphabet_(alphabet_size), order_(order), delta_(delta) {
    if (alphabet_ < 2 || alphabet_ > 65536) throw InvalidArgument("adaptive model alphabet must be in [2, 65536]");
    if (order_ > 3) throw InvalidArgument("adaptive model order must be in [0, 3]");
    if (!(delta_ > 0.0) || !std::isfinite(delta_)) throw InvalidArgument("smoothing delta must be positive");
    const double twice = 2.0 * delta_;
    delta_x2_ = (twice == std::floor(twice) && twice <= 1024.0) ? static_cast<std::uint64_t>(twice) : 0;
}

std::string AdaptiveModel::id() const {
    std::ostringstream os;
    os << "adaptive:" << order_ << ':' << delta_;
    if (alphabet_ != 256) os << ':' << alphabet_;
    return os.str();
}

std::unique_ptr<Model> AdaptiveModel::clone() const {
    auto m = std::make_unique<AdaptiveModel>(alphabet_, order_, delta_);
    m->set_capacity(capacity());
    return m;
}

void AdaptiveModel::on_reset() {
    tables_.clear();
    current_ = nullptr;
}

void AdaptiveModel::on_update(Symbol s) {
    const auto& history = context().symbols_so_far;
    // The table for the context that preceded s.
    const auto key = context_key(std::span(history).first(history.size() - 1), order_);
    auto& t = tables_[key];
    if (t.counts.empty()) t.counts.assign(alphabet_, 0);
    ++t.counts[s];
    ++t.total;
    refresh_current();
}

void AdaptiveModel::refresh_current() {
    auto it = tables_.find(context_key(context().symbols_so_far, order_));
    current_ = it == tables_.end() ? nullptr : &it->second;
}

void AdaptiveModel::probabilities(std::span<double> out) const {
    const double denom = (current_ ? static_cast<double>(current_->total) : 0.0) + static_cast<double>(alphabet_) * delta_;
    for (std::size_t i = 0; i < alphabet_; ++i)
        out[i] = ((current_ ? current_->counts[i] : 0) + delta_) / denom;
}

double AdaptiveModel::log2_prob(Symbol s) const {
    const double c = current_ ? current_->counts.at(s) : 0.0;
    const double n = current_ ? static_cast<double>(current_->total) : 0.0;
    return std::log2(c + delta_) - std::log2(n + static_cast<double>(alphabet_) * delta_);
}

void AdaptiveModel::quantized(int precision, QuantizedPmf& out) const {
    if (delta_x2_ == 0) {
        Model::quantized(precision, out);
        return;
    }
    if (!current_) {
        if (fresh_precision_ != precision) {
            std::vector<std::uint64_t> w(alphabet_, 1);
            quantize_weights_into(w, precision, fresh_pmf_);
            fresh_precision_ = precision;
        }
        out = fresh_pmf_;
        return;
    }
    // Integer weights 2c + 2*delta are proportional to the probabilities.
    quantize_counts_into(current_->counts, current_->total, delta_x2_, precision, out);
}

}  // namespace modelzip
