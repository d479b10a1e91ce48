#include "modelzip/oracle/selftest.hpp"

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/bridge/conformance.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model.hpp"
#include "modelzip/oracle/rational_coder.hpp"

#include <json.hpp>

#include <algorithm>
#include <memory>
#include <random>

namespace modelzip::oracle {

namespace {

std::unique_ptr<Model> model_for_case(std::size_t i) {
    switch (i % 5) {
        case 0: return std::make_unique<UniformModel>(256);
        case 1: return std::make_unique<AdaptiveModel>(256, 0, 1.0);
        case 2: return std::make_unique<AdaptiveModel>(256, 0, 0.5);
        case 3: return std::make_unique<AdaptiveModel>(256, 1, 1.0);
        default: return std::make_unique<AdaptiveModel>(256, 2, 0.5);
    }
}

std::vector<Symbol> random_sequence(std::mt19937_64& rng, std::size_t length) {
    // Skewed alphabets exercise both long and short intervals.
    std::uniform_int_distribution<int> alphabet_pick(0, 2);
    const int kind = alphabet_pick(rng);
    const Symbol top = kind == 0 ? 4 : kind == 1 ? 32 : 256;
    std::uniform_int_distribution<Symbol> sym(0, top - 1);
    std::vector<Symbol> out(length);
    for (auto& s : out) s = sym(rng);
    return out;
}

}  // namespace

SelftestResult run_selftest(std::uint64_t seed, std::size_t cases) {
    SelftestResult r;
    r.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, 256);
    const CoderConfig config{};
    for (std::size_t i = 0; i < cases; ++i) {
        const auto symbols = random_sequence(rng, len(rng));
        auto model = model_for_case(i);
        ++r.oracle_cases;
        try {
            const ChunkFrame frame = encode_chunk(symbols, *model, config);
            if (decode_chunk(frame, *model, config) != symbols) throw Error("finite coder round trip failed");
            model->reset();
            ModelPmfSource enc(*model, config.precision);
            const auto interval = rational_encode(symbols, enc);
            const auto ideal = static_cast<long long>(interval.ideal_bits());
            const long long excess = static_cast<long long>(frame.bit_length) - ideal;
            r.max_excess_bits = std::max(r.max_excess_bits, excess);
            if (excess > 1 + 8)
                throw Error("coder used " + std::to_string(frame.bit_length) + " bits, oracle bound is " +
                            std::to_string(ideal + 9));
            const auto code = shortest_code(interval);
            if (static_cast<long long>(code.bit_count) > ideal + 1) throw Error("oracle code longer than ideal + 1");
            model->reset();
            ModelPmfSource dec(*model, config.precision);
            if (rational_decode(code, symbols.size(), dec) != symbols) throw Error("oracle round trip failed");
        } catch (const std::exception& e) {
            ++r.oracle_failures;
            r.failures.push_back("case " + std::to_string(i) + " (" + model->id() + ", n=" +
                                 std::to_string(symbols.size()) + "): " + e.what());
        }
    }
    for (const std::string endpoint :
         {"mock:uniform", "mock:adaptive:0:1", "mock:kt:1,vocab=300,offset=3", "mock:adaptive,no-byte-map,bos"}) {
        r.conformance_endpoints.push_back(endpoint);
        const auto report = bridge::run_conformance(endpoint);
        for (const auto& c : report.checks)
            if (!c.passed) {
                ++r.conformance_failures;
                r.failures.push_back(endpoint + ": " + c.name + ": " + c.detail);
            }
    }
    return r;
}

std::string to_json(const SelftestResult& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["passed"] = r.passed();
    j["oracle_cases"] = r.oracle_cases;
    j["oracle_failures"] = r.oracle_failures;
    j["max_excess_bits"] = r.max_excess_bits;
    j["conformance_endpoints"] = r.conformance_endpoints;
    j["conformance_failures"] = r.conformance_failures;
    j["failures"] = r.failures;
    return j.dump();
}

}  // namespace modelzip::oracle
