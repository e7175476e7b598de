#include "pathforge/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace pathforge::text {

namespace {

icu::UnicodeString normalized(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (U_FAILURE(status)) return src;
  icu::UnicodeString out = nfc->normalize(src, status);
  return U_FAILURE(status) ? src : out;
}

std::string utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

std::string to_nfc(std::string_view s) { return utf8(normalized(s)); }

std::size_t codepoint_length(std::string_view s) {
  std::size_t count = 0;
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    ++count;
  }
  return count;
}

std::string trim(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  int32_t begin = 0;
  int32_t end = u.length();
  while (begin < end && u_isUWhiteSpace(u.char32At(begin))) begin = u.moveIndex32(begin, 1);
  while (end > begin) {
    int32_t prev = u.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(u.char32At(prev))) break;
    end = prev;
  }
  return utf8(u.tempSubStringBetween(begin, end));
}

std::string fold(std::string_view s) {
  icu::UnicodeString u = normalized(s);
  u.foldCase();
  return utf8(u);
}

std::vector<std::string> words(std::string_view s) {
  icu::UnicodeString u = normalized(s);
  u.foldCase();
  std::vector<std::string> out;
  icu::UnicodeString current;
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
    UChar32 c = u.char32At(i);
    if (u_isalnum(c)) {
      current.append(c);
    } else if (!current.isEmpty()) {
      out.push_back(utf8(current));
      current.remove();
    }
  }
  if (!current.isEmpty()) out.push_back(utf8(current));
  return out;
}

std::set<std::string> content_tokens(std::string_view s) {
  std::set<std::string> out;
  for (auto& w : words(s)) {
    if (codepoint_length(w) >= 3) out.insert(std::move(w));
  }
  return out;
}

}  // namespace pathforge::text
