#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "pathforge/extraction.hpp"

namespace pathforge {

using nlohmann::json;

LiveHttpProvider::LiveHttpProvider(std::string endpoint_url, std::string api_key, double timeout_seconds)
    : api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
  auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(Errc::InvalidConfig, "endpoint url '" + endpoint_url + "' has no scheme");
  auto path_start = endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = endpoint_url;
    path_ = "/";
  } else {
    scheme_host_port_ = endpoint_url.substr(0, path_start);
    path_ = endpoint_url.substr(path_start);
  }
}

RawModelResponse LiveHttpProvider::complete(const ProviderRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(timeout_seconds_));
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                timeout.count() % 1000000);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          timeout.count() % 1000000);
  client.set_bearer_token_auth(api_key_);

  json body = {
      {"model", request.model_name},
      {"temperature", request.temperature},
      {"messages",
       json::array({{{"role", "system"}, {"content", request.prompt.system_message}},
                    {{"role", "user"}, {"content", request.prompt.user_message}}})},
  };

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, body.dump(), "application/json");
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

  if (!res) throw TransientProviderError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientProviderError("provider returned HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw Error(Errc::ProviderRejected, "provider returned HTTP " + std::to_string(res->status));

  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(Errc::ProviderRejected, "provider reply is not JSON");
  try {
    std::string text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    std::string model = reply.value("model", request.model_name);
    return RawModelResponse{std::move(text), elapsed.count(), std::move(model), request.fingerprint};
  } catch (const json::exception& ex) {
    throw Error(Errc::ProviderRejected, std::string("unexpected provider reply: ") + ex.what());
  }
}

}  // namespace pathforge
