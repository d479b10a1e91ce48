#include "modelzip/model_registry.hpp"

#include "modelzip/compressor_predictor.hpp"
#include "modelzip/error.hpp"
#include "modelzip/io.hpp"
#include "modelzip/ngram.hpp"

#include <charconv>
#include <vector>

namespace modelzip {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        parts.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::size_t to_size(const std::string& s, std::string_view spec) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw InvalidArgument("bad number '" + s + "' in model spec '" + std::string(spec) + "'");
    return v;
}

double to_double(const std::string& s, std::string_view spec) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("bad number '" + s + "' in model spec '" + std::string(spec) + "'");
}

}  // namespace

std::unique_ptr<Model> make_model(std::string_view spec) {
    const auto parts = split(spec, ':');
    const std::string& kind = parts[0];
    if (kind == "uniform") {
        if (parts.size() > 2) throw InvalidArgument("uniform takes at most one argument");
        return std::make_unique<UniformModel>(parts.size() == 2 ? to_size(parts[1], spec) : 256);
    }
    if (kind == "adaptive" || kind == "kt") {
        if (parts.size() > 4) throw InvalidArgument("too many fields in model spec '" + std::string(spec) + "'");
        std::size_t order = parts.size() > 1 ? to_size(parts[1], spec) : 0;
        double delta = kind == "kt" ? 0.5 : 1.0;
        if (parts.size() > 2) {
            if (kind == "kt") throw InvalidArgument("kt fixes delta = 0.5");
            delta = to_double(parts[2], spec);
        }
        std::size_t alphabet = parts.size() > 3 ? to_size(parts[3], spec) : 256;
        return std::make_unique<AdaptiveModel>(alphabet, order, delta);
    }
    if (kind == "ngram") {
        if (parts.size() == 2) return std::make_unique<StaticNgramModel>(StaticNgramModel::load(parts[1]));
        if (parts.size() == 3 || parts.size() == 4) {
            auto training = read_file(parts[2]);
            double delta = parts.size() == 4 ? to_double(parts[3], spec) : 1.0;
            return std::make_unique<StaticNgramModel>(train_static_ngram(training, to_size(parts[1], spec), delta));
        }
        throw InvalidArgument("ngram spec is ngram:ORDER:TRAINING_FILE[:delta] or ngram:DUMP");
    }
    if (kind == "deflate-predictor") return make_deflate_predictor();
    throw InvalidArgument("unknown model '" + std::string(spec) + "'");
}

}  // namespace modelzip
