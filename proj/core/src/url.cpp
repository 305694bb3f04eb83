#include "webgraph/url.hpp"

#include <algorithm>
#include <cctype>

namespace webgraph {

namespace {

bool valid_host(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  std::size_t label_len = 0;
  for (char c : host) {
    if (c == '.') {
      if (label_len == 0) return false;
      label_len = 0;
      continue;
    }
    const auto uc = static_cast<unsigned char>(c);
    if (!std::isalnum(uc) && c != '-' && c != '_') return false;
    if (++label_len > 63) return false;
  }
  return label_len > 0;
}

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  });
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::optional<Url> parse_url(std::string_view text) {
  if (text.empty()) return std::nullopt;
  for (char c : text) {
    if (static_cast<unsigned char>(c) <= 0x20) return std::nullopt;
  }
  Url url;
  std::string_view rest = text;
  if (auto pos = rest.find("://"); pos != std::string_view::npos) {
    auto scheme = rest.substr(0, pos);
    // "://" after a path or query delimiter is not a scheme separator.
    if (scheme.find_first_of("/?#") == std::string_view::npos) {
      if (!valid_scheme(scheme)) return std::nullopt;
      url.scheme = to_lower(scheme);
      rest.remove_prefix(pos + 3);
    }
  }

  if (auto hash = rest.find('#'); hash != std::string_view::npos) {
    url.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (auto q = rest.find('?'); q != std::string_view::npos) {
    url.query = std::string(rest.substr(q + 1));
    url.has_query = true;
    rest = rest.substr(0, q);
  }
  std::string_view authority = rest;
  if (auto slash = rest.find('/'); slash != std::string_view::npos) {
    url.path = std::string(rest.substr(slash));
    authority = rest.substr(0, slash);
  }
  if (authority.find('@') != std::string_view::npos) {
    authority = authority.substr(authority.rfind('@') + 1);
  }
  if (auto colon = authority.find(':'); colon != std::string_view::npos) {
    auto port = authority.substr(colon + 1);
    if (port.empty() || port.size() > 5 ||
        !std::all_of(port.begin(), port.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return std::nullopt;
    }
    url.port = std::string(port);
    authority = authority.substr(0, colon);
  }
  if (!valid_host(authority)) return std::nullopt;
  url.host = to_lower(authority);
  return url;
}

std::string Url::to_string() const {
  std::string out;
  if (!scheme.empty()) out += scheme + "://";
  out += host;
  if (!port.empty()) out += ":" + port;
  out += path;
  if (has_query) out += "?" + query;
  if (!fragment.empty()) out += "#" + fragment;
  return out;
}

std::vector<QueryParam> split_query(std::string_view query) {
  std::vector<QueryParam> params;
  std::size_t start = 0;
  while (start <= query.size()) {
    auto amp = query.find('&', start);
    auto piece = query.substr(start, amp == std::string_view::npos ? std::string_view::npos
                                                                    : amp - start);
    if (!piece.empty()) {
      QueryParam p;
      if (auto eq = piece.find('='); eq != std::string_view::npos) {
        p.name = std::string(piece.substr(0, eq));
        p.value = std::string(piece.substr(eq + 1));
        p.has_value = true;
      } else {
        p.name = std::string(piece);
      }
      params.push_back(std::move(p));
    }
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }
  return params;
}

std::string join_query(const std::vector<QueryParam>& params) {
  std::string out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += '&';
    out += params[i].name;
    if (params[i].has_value) out += "=" + params[i].value;
  }
  return out;
}

std::vector<std::string> url_value_tokens(const Url& url) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  const std::string& path = url.path;
  while (start < path.size()) {
    auto slash = path.find('/', start);
    auto end = slash == std::string::npos ? path.size() : slash;
    if (end > start) tokens.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  for (auto& p : split_query(url.query)) {
    if (p.has_value) {
      if (!p.value.empty()) tokens.push_back(std::move(p.value));
    } else {
      tokens.push_back(std::move(p.name));
    }
  }
  return tokens;
}

}  // namespace webgraph
