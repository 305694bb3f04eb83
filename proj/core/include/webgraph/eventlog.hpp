#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace webgraph {

class PublicSuffixList;

enum class EventKind {
  Request,
  Response,
  Redirect,
  ScriptSource,
  ElementCreated,
  ElementModified,
  StorageSet,
  StorageGet,
};

enum class ResourceType { Script, Image, Iframe, Xhr, Stylesheet, Other };
inline constexpr int kResourceTypeCount = 6;

enum class StorageKind { Cookie, Local };

std::string_view to_string(EventKind k);
std::string_view to_string(ResourceType t);
std::string_view to_string(StorageKind s);
std::optional<EventKind> parse_event_kind(std::string_view s);
std::optional<ResourceType> parse_resource_type(std::string_view s);
std::optional<StorageKind> parse_storage_kind(std::string_view s);

struct Initiator {
  enum class Kind { Parser, Script, Element };
  Kind kind = Kind::Parser;
  std::optional<std::string> id;
  friend bool operator==(const Initiator&, const Initiator&) = default;
};

struct StorageWrite {
  StorageKind storage = StorageKind::Cookie;
  std::string key;
  std::string value;
  friend bool operator==(const StorageWrite&, const StorageWrite&) = default;
};

struct RequestEvent {
  std::string request_id;
  std::string url;
  ResourceType resource_type = ResourceType::Other;
  Initiator initiator;
  std::vector<std::string> cookie_keys;
  friend bool operator==(const RequestEvent&, const RequestEvent&) = default;
};

struct ResponseEvent {
  std::string request_id;
  int status = 200;
  std::vector<StorageWrite> set_storage;
  friend bool operator==(const ResponseEvent&, const ResponseEvent&) = default;
};

/// Declares `new_request_id` as the follow-up request to `to_url`.
struct RedirectEvent {
  std::string request_id;
  std::string new_request_id;
  std::string to_url;
  friend bool operator==(const RedirectEvent&, const RedirectEvent&) = default;
};

struct ScriptSourceEvent {
  std::string script_id;
  std::optional<std::string> url;
  std::optional<std::string> parent_element;
  bool is_eval = false;
  friend bool operator==(const ScriptSourceEvent&, const ScriptSourceEvent&) = default;
};

struct ElementCreatedEvent {
  struct Creator {
    enum class Kind { Parser, Script };
    Kind kind = Kind::Parser;
    std::optional<std::string> id;
    friend bool operator==(const Creator&, const Creator&) = default;
  };
  std::string element_id;
  std::string tag;
  Creator creator;
  friend bool operator==(const ElementCreatedEvent&, const ElementCreatedEvent&) = default;
};

struct ElementModifiedEvent {
  std::string element_id;
  std::string script_id;
  std::string attribute;
  friend bool operator==(const ElementModifiedEvent&, const ElementModifiedEvent&) = default;
};

/// Payload shared by storage_set and storage_get.
struct StorageAccessEvent {
  struct Actor {
    enum class Kind { Script, Request };
    Kind kind = Kind::Script;
    std::string id;
    friend bool operator==(const Actor&, const Actor&) = default;
  };
  Actor actor;
  StorageKind storage = StorageKind::Cookie;
  std::string key;
  std::string value;
  friend bool operator==(const StorageAccessEvent&, const StorageAccessEvent&) = default;
};

using EventPayload = std::variant<RequestEvent, ResponseEvent, RedirectEvent, ScriptSourceEvent,
                                  ElementCreatedEvent, ElementModifiedEvent, StorageAccessEvent>;

struct PageLoadEvent {
  std::int64_t ts = 0;
  EventKind kind = EventKind::Request;
  EventPayload payload;
  std::size_t line_no = 0;  // 1-based source line; 0 for programmatic events

  friend bool operator==(const PageLoadEvent&, const PageLoadEvent&) = default;
};

struct PageTrace {
  std::string page_id;  // optional "page_id" header field; empty when absent
  std::string page_url;
  std::string first_party;
  std::vector<PageLoadEvent> events;

  /// Distinct request ids: request events plus redirect targets.
  std::size_t network_request_count() const;
  std::size_t count(EventKind kind) const;

  friend bool operator==(const PageTrace&, const PageTrace&) = default;
};

struct TraceDiagnostic {
  std::size_t line_no = 0;
  std::string rule;  // DuplicateId, NonMonotonicTimestamp, DanglingReference, FirstPartyMismatch
  std::string detail;
  friend bool operator==(const TraceDiagnostic&, const TraceDiagnostic&) = default;
};

/// Parses a JSONL page trace. Throws MalformedLine, SchemaViolation or
/// DanglingReference; any other invariant violation raises DataError listing
/// the diagnostics.
PageTrace parse_trace(std::istream& in, const PublicSuffixList* suffixes = nullptr);
PageTrace parse_trace(std::string_view text, const PublicSuffixList* suffixes = nullptr);
PageTrace load_trace(const std::string& path, const PublicSuffixList* suffixes = nullptr);

/// Empty iff every trace invariant holds. Uses the bundled suffix list when
/// `suffixes` is null.
std::vector<TraceDiagnostic> validate_trace(const PageTrace& trace,
                                            const PublicSuffixList* suffixes = nullptr);

std::string serialize_trace(const PageTrace& trace);

}  // namespace webgraph
