#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>

namespace webgraph {

/// Registrable-domain (eTLD+1) resolver over a public-suffix rule set.
///
/// Rules follow the public suffix list format: plain suffixes, "*." wildcards
/// and "!" exceptions. Hosts that match no rule fall back to the last two
/// labels, which is also what the implicit "*" rule of the list yields.
class PublicSuffixList {
 public:
  PublicSuffixList() = default;

  static PublicSuffixList parse(std::string_view text);
  static PublicSuffixList from_file(const std::string& path);

  /// The snapshot compiled into the library from data/public_suffix_list.dat.
  static const PublicSuffixList& bundled();

  /// eTLD+1 of `host`. IPv4 literals are returned unchanged. Returns nullopt
  /// when the host is itself a public suffix.
  std::optional<std::string> registrable_domain(std::string_view host) const;

  /// registrable_domain() or the host itself when it has none.
  std::string site_of(std::string_view host) const;

  std::size_t rule_count() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // stored without the "*."
  std::unordered_set<std::string> exceptions_;  // stored without the "!"
};

}  // namespace webgraph
