#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mua/harness.hpp"

namespace mua {

using Json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

struct ExperimentConfig {
    ExperimentSpec spec;
    std::optional<std::size_t> oracle_precision;  // echoed; every kind has closed-form marginals
    Json echo;                                     // the parsed config, as given
};

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

template <class T>
std::optional<T> get_opt(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline BaseLaw parse_base(const Json& j) {
    const std::string kind = get_or<std::string>(j, "kind", "uniform");
    if (kind == "uniform") return BaseLaw::uniform(get_or(j, "lo", 0.0), get_or(j, "hi", 1.0));
    if (kind == "power") return BaseLaw::power(require(j, "gamma", "base").get<double>());
    if (kind == "bernoulli") return BaseLaw::bernoulli(require(j, "p", "base").get<double>(), get_or(j, "level", 1.0));
    throw ConfigError("unknown base law '" + kind + "'");
}

}  // namespace detail

inline DistributionSpec parse_distribution(const Json& j, std::size_t K, std::size_t T) {
    const std::string kind = detail::require(j, "kind", "distribution").get<std::string>();
    if (kind == "discrete") {
        DiscreteSpec s;
        for (const auto& a : detail::require(j, "atoms", "discrete")) s.atoms.emplace_back(a.get<std::vector<double>>());
        s.probabilities = detail::require(j, "probabilities", "discrete").get<std::vector<double>>();
        return s;
    }
    if (kind == "iid_order_stats")
        return IidOrderStatsSpec{detail::require(j, "N", "iid_order_stats").get<std::size_t>(), K,
                                 detail::parse_base(detail::get_or(j, "base", Json::object()))};
    if (kind == "delta_separated") {
        DeltaSeparatedSpec s;
        for (const auto& iv : detail::require(j, "intervals", "delta_separated")) {
            const auto pair = iv.get<std::vector<double>>();
            if (pair.size() != 2) throw ConfigError("delta_separated: each interval is [lo, hi]");
            s.intervals.push_back({pair[0], pair[1]});
        }
        s.delta = detail::get_or(j, "delta", 0.0);
        return s;
    }
    if (kind == "first_price_hard")
        return FirstPriceHardSpec{detail::get_or(j, "T", static_cast<double>(T)), detail::get_opt<long>(j, "index"),
                                  detail::get_or(j, "K", K)};
    if (kind == "uniform3_hard")
        return Uniform3HardSpec{detail::get_or(j, "T", static_cast<double>(T)), detail::get_opt<long>(j, "index"),
                                detail::get_opt<double>(j, "epsilon")};
    if (kind == "iid_bernoulli_hard") return IidBernoulliHardSpec{detail::require(j, "p", "iid_bernoulli_hard").get<double>()};
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

inline LearnerSpec parse_learner(const Json& j) {
    LearnerSpec s;
    s.name = detail::require(j, "name", "learner").get<std::string>();
    const Json params = detail::get_or(j, "params", Json::object());
    s.refresh.ratio = detail::get_or(params, "refresh_ratio", 0.0);
    s.refresh.warmup = detail::get_or<std::size_t>(params, "warmup", 32);
    s.exploration = detail::get_opt<std::size_t>(params, "exploration");
    s.grid_size = detail::get_opt<std::size_t>(params, "grid_size");
    if (params.contains("bid")) {
        if (params.at("bid").is_string()) {
            if (params.at("bid").get<std::string>() != "oracle") throw ConfigError("fixed_bid: bid must be a vector or \"oracle\"");
            s.fixed_bid_oracle = true;
        } else {
            s.fixed_bid = params.at("bid").get<std::vector<double>>();
        }
    }
    return s;
}

inline ExperimentConfig parse_config(const Json& j) {
    try {
        ExperimentConfig c;
        c.echo = j;
        ExperimentSpec& s = c.spec;
        const std::string fmt = detail::require(j, "format", "config").get<std::string>();
        if (fmt == "uniform")
            s.problem.format = AuctionFormat::Uniform;
        else if (fmt == "discriminatory")
            s.problem.format = AuctionFormat::Discriminatory;
        else
            throw ConfigError("format must be 'uniform' or 'discriminatory'");
        const auto K = detail::require(j, "K", "config").get<std::size_t>();
        s.T = detail::require(j, "T", "config").get<std::size_t>();
        s.problem.v = ValuationVector(detail::require(j, "valuations", "config").get<std::vector<double>>());
        if (s.problem.v.size() != K) throw ConfigError("valuations must have exactly K entries");
        s.problem.dist = build_distribution(parse_distribution(detail::require(j, "distribution", "config"), K, s.T));
        s.problem.learner = parse_learner(detail::require(j, "learner", "config"));
        const std::string fb = detail::get_or<std::string>(j, "feedback", "full");
        if (fb == "full")
            s.problem.feedback = FeedbackMode::Full;
        else if (fb == "bandit")
            s.problem.feedback = FeedbackMode::Bandit;
        else
            throw ConfigError("feedback must be 'full' or 'bandit'");
        s.seeds = detail::get_or(j, "seeds", std::vector<std::uint64_t>{0});
        s.replications = detail::get_or<std::size_t>(j, "replications", 1);
        s.T_grid = detail::get_or(j, "T_grid", std::vector<std::size_t>{});
        c.oracle_precision = detail::get_opt<std::size_t>(j, "oracle_precision");
        if (s.T < 1) throw ConfigError("T must be at least 1");
        if (s.replications < 1) throw ConfigError("replications must be at least 1");
        check_compatibility(s.problem.learner, s.problem.format, s.problem.feedback, *s.problem.dist, s.problem.v);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------- output

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline constexpr const char* kTraceHeader = "replication,t,instant_regret,cumulative_regret";

inline void write_trace_row(std::ostream& os, std::size_t replication, const RoundRecord& r) {
    os << replication << ',' << r.t << ',' << format_double(r.instant_regret) << ','
       << format_double(r.cumulative_regret) << '\n';
}

inline Json summary_to_json(const Summary& s, const Json& config_echo) {
    Json j;
    j["config"] = config_echo;
    j["oracle"] = {{"b_star", s.b_star.vec()}, {"value", s.oracle_value}};
    Json hs = Json::array();
    for (const auto& h : s.horizons)
        hs.push_back({{"T", h.T}, {"mean", h.mean}, {"stderr", h.stderr_}, {"episodes", h.episodes}, {"values", h.values}});
    j["horizons"] = hs;
    if (s.slope)
        j["slope"] = {{"slope", s.slope->slope},
                      {"intercept", s.slope->intercept},
                      {"r_squared", s.slope->r_squared},
                      {"points_used", s.slope->points_used},
                      {"warnings", s.slope->warnings}};
    j["diagnostics"] = {{"mean_realized_utility", s.mean_realized_utility}, {"min_instant_regret", s.min_instant_regret}};
    return j;
}

inline Summary summary_from_json(const Json& j) {
    Summary s;
    s.b_star = BidVector(j.at("oracle").at("b_star").get<std::vector<double>>());
    s.oracle_value = j.at("oracle").at("value").get<double>();
    for (const auto& h : j.at("horizons")) {
        HorizonStat st;
        st.T = h.at("T").get<std::size_t>();
        st.mean = h.at("mean").get<double>();
        st.stderr_ = h.at("stderr").get<double>();
        st.episodes = h.at("episodes").get<std::size_t>();
        st.values = h.at("values").get<std::vector<double>>();
        s.horizons.push_back(std::move(st));
    }
    if (j.contains("slope")) {
        const Json& f = j.at("slope");
        SlopeFit fit;
        fit.slope = f.at("slope").get<double>();
        fit.intercept = f.at("intercept").get<double>();
        fit.r_squared = f.at("r_squared").get<double>();
        fit.points_used = f.at("points_used").get<std::size_t>();
        fit.warnings = f.at("warnings").get<std::vector<std::string>>();
        s.slope = fit;
    }
    s.mean_realized_utility = j.at("diagnostics").at("mean_realized_utility").get<double>();
    s.min_instant_regret = j.at("diagnostics").at("min_instant_regret").get<double>();
    return s;
}

inline void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace mua
