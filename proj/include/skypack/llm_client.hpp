#pragma once

// Chat-completion adapter for an external text reasoner. Disabled unless
// SKYPACK_LLM_URL and SKYPACK_LLM_MODEL are set; SKYPACK_LLM_KEY is optional.

#include "skypack/reasoner.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace skypack {

class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LlmConfig {
    std::string url; ///< full endpoint, e.g. http://host:port/v1/chat/completions
    std::string model;
    std::string key;
    int timeout_s = 60;

    static std::optional<LlmConfig> from_env();
};

class LlmClient {
public:
    explicit LlmClient(LlmConfig config);

    /// One blocking request; returns the first choice's message content.
    std::string complete(const std::string& prompt) const;

private:
    LlmConfig config_;
    std::string origin_;
    std::string path_;
};

struct LlmDecision {
    Decision decision;
    int attempts = 0;
    bool fell_back = false;
};

/// Asks the client, retries once on a transport or parse failure, then falls back to search.
LlmDecision llm_decide(const LlmClient& client, const Observation& obs, const std::optional<SerializedPack>& pack,
    const PublicWorldView& view, const CostModel& cost, RandomStream& rng);

} // namespace skypack
