#include "skypack/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>

namespace skypack {

std::optional<LlmConfig> LlmConfig::from_env()
{
    const char* url = std::getenv("SKYPACK_LLM_URL");
    const char* model = std::getenv("SKYPACK_LLM_MODEL");
    if (!url || !model || !*url || !*model)
        return std::nullopt;
    LlmConfig c;
    c.url = url;
    c.model = model;
    if (const char* key = std::getenv("SKYPACK_LLM_KEY"))
        c.key = key;
    return c;
}

LlmClient::LlmClient(LlmConfig config) : config_(std::move(config))
{
    const auto scheme = config_.url.find("://");
    if (scheme == std::string::npos)
        throw LlmError("endpoint URL needs a scheme: " + config_.url);
    const auto slash = config_.url.find('/', scheme + 3);
    origin_ = config_.url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : config_.url.substr(slash);
}

std::string LlmClient::complete(const std::string& prompt) const
{
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_write_timeout(config_.timeout_s, 0);

    httplib::Headers headers;
    if (!config_.key.empty())
        headers.emplace("Authorization", "Bearer " + config_.key);
    const nlohmann::json request{{"model", config_.model}, {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};

    auto res = client.Post(path_, headers, request.dump(), "application/json");
    if (!res)
        throw LlmError("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw LlmError("endpoint returned HTTP " + std::to_string(res->status));
    try {
        const auto body = nlohmann::json::parse(res->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("unexpected response body: ") + e.what());
    }
}

namespace {

void check_legal(const Decision& d, const Observation& obs, const PublicWorldView& view)
{
    const auto& m = d.decision;
    if (m.next_cluster && !obs.find(*m.next_cluster))
        throw ParseError("decision names a cluster that is not remaining");
    if (!m.next_cluster && !obs.remaining.empty())
        throw ParseError("decision ends the mission with clusters remaining");
    if (std::find(view.known_obstacles.begin(), view.known_obstacles.end(), m.waypoint) != view.known_obstacles.end())
        throw ParseError("decision waypoint is a known obstacle");
}

} // namespace

LlmDecision llm_decide(const LlmClient& client, const Observation& obs, const std::optional<SerializedPack>& pack,
    const PublicWorldView& view, const CostModel& cost, RandomStream& rng)
{
    LlmDecision out;
    const std::string prompt = build_prompt(obs, pack);
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++out.attempts;
        try {
            Decision d = parse_llm_response(client.complete(prompt), view.width, view.height);
            check_legal(d, obs, view);
            out.decision = std::move(d);
            return out;
        } catch (const ParseError&) {
        } catch (const LlmError&) {
        }
    }
    out.fell_back = true;
    out.decision = search_decide(obs, view, cost, rng);
    return out;
}

} // namespace skypack
