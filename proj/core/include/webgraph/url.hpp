#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webgraph {

/// A URL split into the components the pipeline cares about. Scheme-less
/// inputs such as "tracker1.com/track.js" are accepted.
struct Url {
  std::string scheme;  // empty when the input had no "scheme://" prefix
  std::string host;    // lowercased
  std::string port;    // digits only, empty when absent
  std::string path;    // begins with '/' or is empty
  std::string query;   // without the leading '?'
  std::string fragment;
  bool has_query = false;

  std::string to_string() const;
};

std::optional<Url> parse_url(std::string_view text);

/// One query parameter. `has_value` is false for bare "flag" parameters.
struct QueryParam {
  std::string name;
  std::string value;
  bool has_value = false;
};

/// Splits on '&', then each parameter at its first '=' so that values with
/// base64 padding survive intact.
std::vector<QueryParam> split_query(std::string_view query);
std::string join_query(const std::vector<QueryParam>& params);

/// Tokens used for identifier matching: query parameter values (or bare
/// parameters) and non-empty path segments.
std::vector<std::string> url_value_tokens(const Url& url);

std::string to_lower(std::string_view s);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace webgraph
