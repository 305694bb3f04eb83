#include "webgraph/public_suffix.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "webgraph/errors.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

namespace detail {
extern const char* const kBundledPublicSuffixList;
}

namespace {

bool is_ipv4(std::string_view host) {
  int dots = 0;
  int digits = 0;
  for (char c : host) {
    if (c == '.') {
      if (digits == 0) return false;
      ++dots;
      digits = 0;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      if (++digits > 3) return false;
    } else {
      return false;
    }
  }
  return dots == 3 && digits > 0;
}

std::vector<std::string_view> split_labels(std::string_view host) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (start <= host.size()) {
    auto dot = host.find('.', start);
    if (dot == std::string_view::npos) {
      labels.push_back(host.substr(start));
      break;
    }
    labels.push_back(host.substr(start, dot - start));
    start = dot + 1;
  }
  return labels;
}

std::string join_from(const std::vector<std::string_view>& labels, std::size_t first) {
  std::string out;
  for (std::size_t i = first; i < labels.size(); ++i) {
    if (i > first) out += '.';
    out += labels[i];
  }
  return out;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view text) {
  PublicSuffixList psl;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    // A rule is the first whitespace-delimited token of the line.
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    auto end = line.find_first_of(" \t\r", begin);
    std::string rule = to_lower(line.substr(begin, end == std::string::npos ? end : end - begin));
    if (rule.rfind("//", 0) == 0) continue;
    if (rule.rfind("!", 0) == 0) {
      psl.exceptions_.insert(rule.substr(1));
    } else if (rule.rfind("*.", 0) == 0) {
      psl.wildcards_.insert(rule.substr(2));
    } else {
      psl.rules_.insert(rule);
    }
  }
  return psl;
}

PublicSuffixList PublicSuffixList::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read public suffix list '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const PublicSuffixList& PublicSuffixList::bundled() {
  static const PublicSuffixList list = parse(detail::kBundledPublicSuffixList);
  return list;
}

std::optional<std::string> PublicSuffixList::registrable_domain(std::string_view host_in) const {
  std::string host = to_lower(host_in);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) return std::nullopt;
  if (is_ipv4(host)) return host;

  const auto labels = split_labels(host);
  // Index of the first label of the longest matching public suffix.
  std::optional<std::size_t> suffix_start;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string candidate = join_from(labels, i);
    if (exceptions_.count(candidate)) {
      suffix_start = i + 1;
      break;
    }
    if (rules_.count(candidate)) {
      suffix_start = i;
      break;
    }
    if (i + 1 < labels.size() && wildcards_.count(join_from(labels, i + 1))) {
      suffix_start = i;
      break;
    }
  }
  // Implicit "*" rule: the last label is the suffix.
  const std::size_t start = suffix_start.value_or(labels.size() - 1);
  if (start == 0) return std::nullopt;
  return join_from(labels, start - 1);
}

std::string PublicSuffixList::site_of(std::string_view host) const {
  if (auto d = registrable_domain(host)) return *d;
  return to_lower(host);
}

}  // namespace webgraph
