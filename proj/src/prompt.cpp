#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "pathforge/extraction.hpp"
#include "pathforge/text.hpp"

namespace pathforge {

namespace {

// Versioned together with kPromptSchemaVersion; any edit to this text is a new
// prompt version and must update the golden copy under tests/data.
constexpr std::string_view kSystemMessage = R"(You help a legal expert encode legislation as a decision pathway.
The user message contains the text of one legislative article. Extract the requirements (legal criteria) and the legal conclusions it contains, and create the links between them.

Rules:
1. Phrase every criterion as a yes/no question in the third person, staying close to the wording of the article.
2. Every question has exactly two outgoing connections: one for the answer "yes" and one for the answer "no".
3. A connection leads to another question or to a conclusion. Conclusions end the pathway and have no outgoing connections.
4. Do not put criteria inside a conclusion. Every condition must be its own question.
5. When the article does not say what happens if a criterion is not met, connect the "no" answer to a default conclusion with the text "The rule does not apply." and "default": true. Never derive a consequence from the absence of a criterion; this would be denying the antecedent.
6. The pathway must not be recursive. No connection may lead back to a block that comes before it.
7. There is exactly one starting question, named in "root", and every block must be reachable from it.
8. Use only content found in the article. Do not invent criteria or conclusions.

Respond with a single JSON object and nothing else: no commentary, no markdown. Use exactly this form:
{"blocks":[{"id":"<string>","type":"question"|"conclusion","text":"<string>","default":true|false}],"connections":[{"from":"<block id>","to":"<block id>","answer":"yes"|"no"}],"root":"<block id>"}
"default" is only meaningful for conclusions and may be omitted when false.
Schema version: pathforge-prompt/1
)";

}  // namespace

PromptBundle build_prompt(const Article& article) {
  if (text::trim(article.text).empty())
    throw Error(Errc::EmptyArticle, "article '" + article.id + "' has no text");
  return PromptBundle{std::string(kSystemMessage), article.text, std::string(kPromptSchemaVersion)};
}

std::string request_fingerprint(const PromptBundle& prompt, const std::string& model_name,
                                double temperature) {
  const std::string payload =
      nlohmann::json::array({prompt.system_message, prompt.user_message, model_name, temperature})
          .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace pathforge
