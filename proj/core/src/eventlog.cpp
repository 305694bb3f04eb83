#include "webgraph/eventlog.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "webgraph/errors.hpp"
#include "webgraph/public_suffix.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

using nlohmann::json;

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Request: return "request";
    case EventKind::Response: return "response";
    case EventKind::Redirect: return "redirect";
    case EventKind::ScriptSource: return "script_source";
    case EventKind::ElementCreated: return "element_created";
    case EventKind::ElementModified: return "element_modified";
    case EventKind::StorageSet: return "storage_set";
    case EventKind::StorageGet: return "storage_get";
  }
  return "?";
}

std::string_view to_string(ResourceType t) {
  switch (t) {
    case ResourceType::Script: return "script";
    case ResourceType::Image: return "image";
    case ResourceType::Iframe: return "iframe";
    case ResourceType::Xhr: return "xhr";
    case ResourceType::Stylesheet: return "stylesheet";
    case ResourceType::Other: return "other";
  }
  return "?";
}

std::string_view to_string(StorageKind s) { return s == StorageKind::Cookie ? "cookie" : "local"; }

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::Request, EventKind::Response, EventKind::Redirect,
                 EventKind::ScriptSource, EventKind::ElementCreated, EventKind::ElementModified,
                 EventKind::StorageSet, EventKind::StorageGet}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<ResourceType> parse_resource_type(std::string_view s) {
  for (auto t : {ResourceType::Script, ResourceType::Image, ResourceType::Iframe,
                 ResourceType::Xhr, ResourceType::Stylesheet, ResourceType::Other}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<StorageKind> parse_storage_kind(std::string_view s) {
  if (s == "cookie") return StorageKind::Cookie;
  if (s == "local") return StorageKind::Local;
  return std::nullopt;
}

std::size_t PageTrace::network_request_count() const {
  std::size_t n = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::Request || e.kind == EventKind::Redirect) ++n;
  }
  return n;
}

std::size_t PageTrace::count(EventKind kind) const {
  std::size_t n = 0;
  for (const auto& e : events) n += e.kind == kind;
  return n;
}

namespace {

// Field accessors that raise SchemaViolation with the offending field name.
class Fields {
 public:
  Fields(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

  const json& at(const char* name) const {
    auto it = obj_.find(name);
    if (it == obj_.end()) throw SchemaViolation(line_, name);
    return *it;
  }
  std::string str(const char* name) const {
    const auto& v = at(name);
    if (!v.is_string()) throw SchemaViolation(line_, name);
    return v.get<std::string>();
  }
  std::optional<std::string> nullable_str(const char* name) const {
    const auto& v = at(name);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw SchemaViolation(line_, name);
    return v.get<std::string>();
  }
  std::int64_t integer(const char* name) const {
    const auto& v = at(name);
    if (!v.is_number_integer()) throw SchemaViolation(line_, name);
    return v.get<std::int64_t>();
  }
  bool boolean(const char* name) const {
    const auto& v = at(name);
    if (!v.is_boolean()) throw SchemaViolation(line_, name);
    return v.get<bool>();
  }
  Fields object(const char* name) const {
    const auto& v = at(name);
    if (!v.is_object()) throw SchemaViolation(line_, name);
    return Fields(v, line_);
  }
  const json& array(const char* name) const {
    const auto& v = at(name);
    if (!v.is_array()) throw SchemaViolation(line_, name);
    return v;
  }
  std::size_t line() const { return line_; }

 private:
  const json& obj_;
  std::size_t line_;
};

template <typename T, typename Parse>
T enum_field(const Fields& f, const char* name, Parse parse) {
  auto v = parse(f.str(name));
  if (!v) throw SchemaViolation(f.line(), name);
  return *v;
}

StorageKind storage_field(const Fields& f) {
  return enum_field<StorageKind>(f, "storage", parse_storage_kind);
}

PageLoadEvent parse_event(const json& obj, std::size_t line) {
  Fields f(obj, line);
  PageLoadEvent ev;
  ev.line_no = line;
  ev.ts = f.integer("ts");
  ev.kind = enum_field<EventKind>(f, "kind", parse_event_kind);
  switch (ev.kind) {
    case EventKind::Request: {
      RequestEvent r;
      r.request_id = f.str("request_id");
      r.url = f.str("url");
      r.resource_type = enum_field<ResourceType>(f, "resource_type", parse_resource_type);
      auto init = f.object("initiator");
      const auto kind = init.str("kind");
      if (kind == "parser") r.initiator.kind = Initiator::Kind::Parser;
      else if (kind == "script") r.initiator.kind = Initiator::Kind::Script;
      else if (kind == "element") r.initiator.kind = Initiator::Kind::Element;
      else throw SchemaViolation(line, "initiator.kind");
      r.initiator.id = init.nullable_str("id");
      for (const auto& k : f.array("cookie_keys")) {
        if (!k.is_string()) throw SchemaViolation(line, "cookie_keys");
        r.cookie_keys.push_back(k.get<std::string>());
      }
      ev.payload = std::move(r);
      break;
    }
    case EventKind::Response: {
      ResponseEvent r;
      r.request_id = f.str("request_id");
      r.status = static_cast<int>(f.integer("status"));
      for (const auto& w : f.array("set_storage")) {
        if (!w.is_object()) throw SchemaViolation(line, "set_storage");
        Fields wf(w, line);
        r.set_storage.push_back({storage_field(wf), wf.str("key"), wf.str("value")});
      }
      ev.payload = std::move(r);
      break;
    }
    case EventKind::Redirect:
      ev.payload = RedirectEvent{f.str("request_id"), f.str("new_request_id"), f.str("to_url")};
      break;
    case EventKind::ScriptSource:
      ev.payload = ScriptSourceEvent{f.str("script_id"), f.nullable_str("url"),
                                     f.nullable_str("parent_element"), f.boolean("is_eval")};
      break;
    case EventKind::ElementCreated: {
      ElementCreatedEvent e;
      e.element_id = f.str("element_id");
      e.tag = f.str("tag");
      auto creator = f.object("creator");
      const auto kind = creator.str("kind");
      if (kind == "parser") e.creator.kind = ElementCreatedEvent::Creator::Kind::Parser;
      else if (kind == "script") e.creator.kind = ElementCreatedEvent::Creator::Kind::Script;
      else throw SchemaViolation(line, "creator.kind");
      e.creator.id = creator.nullable_str("id");
      ev.payload = std::move(e);
      break;
    }
    case EventKind::ElementModified:
      ev.payload = ElementModifiedEvent{f.str("element_id"), f.str("script_id"), f.str("attribute")};
      break;
    case EventKind::StorageSet:
    case EventKind::StorageGet: {
      StorageAccessEvent s;
      auto actor = f.object("actor");
      const auto kind = actor.str("kind");
      if (kind == "script") s.actor.kind = StorageAccessEvent::Actor::Kind::Script;
      else if (kind == "request") s.actor.kind = StorageAccessEvent::Actor::Kind::Request;
      else throw SchemaViolation(line, "actor.kind");
      s.actor.id = actor.str("id");
      s.storage = storage_field(f);
      s.key = f.str("key");
      s.value = f.str("value");
      ev.payload = std::move(s);
      break;
    }
  }
  return ev;
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json event_to_json(const PageLoadEvent& ev) {
  json j = {{"record", "event"}, {"kind", to_string(ev.kind)}, {"ts", ev.ts}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RequestEvent>) {
          static constexpr const char* kInit[] = {"parser", "script", "element"};
          j["request_id"] = p.request_id;
          j["url"] = p.url;
          j["resource_type"] = to_string(p.resource_type);
          j["initiator"] = {{"kind", kInit[static_cast<int>(p.initiator.kind)]},
                            {"id", nullable(p.initiator.id)}};
          j["cookie_keys"] = p.cookie_keys;
        } else if constexpr (std::is_same_v<T, ResponseEvent>) {
          j["request_id"] = p.request_id;
          j["status"] = p.status;
          j["set_storage"] = json::array();
          for (const auto& w : p.set_storage) {
            j["set_storage"].push_back(
                {{"storage", to_string(w.storage)}, {"key", w.key}, {"value", w.value}});
          }
        } else if constexpr (std::is_same_v<T, RedirectEvent>) {
          j["request_id"] = p.request_id;
          j["new_request_id"] = p.new_request_id;
          j["to_url"] = p.to_url;
        } else if constexpr (std::is_same_v<T, ScriptSourceEvent>) {
          j["script_id"] = p.script_id;
          j["url"] = nullable(p.url);
          j["parent_element"] = nullable(p.parent_element);
          j["is_eval"] = p.is_eval;
        } else if constexpr (std::is_same_v<T, ElementCreatedEvent>) {
          j["element_id"] = p.element_id;
          j["tag"] = p.tag;
          j["creator"] = {
              {"kind", p.creator.kind == ElementCreatedEvent::Creator::Kind::Parser ? "parser"
                                                                                    : "script"},
              {"id", nullable(p.creator.id)}};
        } else if constexpr (std::is_same_v<T, ElementModifiedEvent>) {
          j["element_id"] = p.element_id;
          j["script_id"] = p.script_id;
          j["attribute"] = p.attribute;
        } else {
          j["actor"] = {
              {"kind", p.actor.kind == StorageAccessEvent::Actor::Kind::Script ? "script"
                                                                               : "request"},
              {"id", p.actor.id}};
          j["storage"] = to_string(p.storage);
          j["key"] = p.key;
          j["value"] = p.value;
        }
      },
      ev.payload);
  return j;
}

bool payload_matches_kind(const PageLoadEvent& ev) {
  switch (ev.kind) {
    case EventKind::Request: return std::holds_alternative<RequestEvent>(ev.payload);
    case EventKind::Response: return std::holds_alternative<ResponseEvent>(ev.payload);
    case EventKind::Redirect: return std::holds_alternative<RedirectEvent>(ev.payload);
    case EventKind::ScriptSource: return std::holds_alternative<ScriptSourceEvent>(ev.payload);
    case EventKind::ElementCreated: return std::holds_alternative<ElementCreatedEvent>(ev.payload);
    case EventKind::ElementModified:
      return std::holds_alternative<ElementModifiedEvent>(ev.payload);
    case EventKind::StorageSet:
    case EventKind::StorageGet: return std::holds_alternative<StorageAccessEvent>(ev.payload);
  }
  return false;
}

}  // namespace

std::vector<TraceDiagnostic> validate_trace(const PageTrace& trace,
                                            const PublicSuffixList* suffixes) {
  const auto& psl = suffixes ? *suffixes : PublicSuffixList::bundled();
  std::vector<TraceDiagnostic> diags;
  auto report = [&](std::size_t line, const char* rule, std::string detail) {
    diags.push_back({line, rule, std::move(detail)});
  };

  if (auto url = parse_url(trace.page_url)) {
    if (psl.site_of(url->host) != trace.first_party) {
      report(0, "FirstPartyMismatch", trace.first_party);
    }
  } else {
    report(0, "FirstPartyMismatch", trace.page_url);
  }

  std::unordered_set<std::string> requests, elements, scripts;
  auto declare = [&](std::unordered_set<std::string>& set, const std::string& id,
                     std::size_t line) {
    if (!set.insert(id).second) report(line, "DuplicateId", id);
  };
  auto require = [&](const std::unordered_set<std::string>& set,
                     const std::optional<std::string>& id, std::size_t line) {
    if (!id || !set.count(*id)) report(line, "DanglingReference", id.value_or("null"));
  };

  std::optional<std::int64_t> last_ts;
  for (const auto& ev : trace.events) {
    const auto line = ev.line_no;
    if (last_ts && ev.ts < *last_ts) {
      report(line, "NonMonotonicTimestamp", std::to_string(ev.ts));
    }
    last_ts = ev.ts;
    if (!payload_matches_kind(ev)) {
      report(line, "KindMismatch", std::string(to_string(ev.kind)));
      continue;
    }
    switch (ev.kind) {
      case EventKind::Request: {
        const auto& r = std::get<RequestEvent>(ev.payload);
        if (r.initiator.kind == Initiator::Kind::Script) require(scripts, r.initiator.id, line);
        if (r.initiator.kind == Initiator::Kind::Element) require(elements, r.initiator.id, line);
        declare(requests, r.request_id, line);
        break;
      }
      case EventKind::Response:
        require(requests, std::get<ResponseEvent>(ev.payload).request_id, line);
        break;
      case EventKind::Redirect: {
        const auto& r = std::get<RedirectEvent>(ev.payload);
        require(requests, r.request_id, line);
        declare(requests, r.new_request_id, line);
        break;
      }
      case EventKind::ScriptSource: {
        const auto& s = std::get<ScriptSourceEvent>(ev.payload);
        if (s.parent_element) require(elements, s.parent_element, line);
        declare(scripts, s.script_id, line);
        break;
      }
      case EventKind::ElementCreated: {
        const auto& e = std::get<ElementCreatedEvent>(ev.payload);
        if (e.creator.kind == ElementCreatedEvent::Creator::Kind::Script) {
          require(scripts, e.creator.id, line);
        }
        declare(elements, e.element_id, line);
        break;
      }
      case EventKind::ElementModified: {
        const auto& m = std::get<ElementModifiedEvent>(ev.payload);
        require(elements, m.element_id, line);
        require(scripts, m.script_id, line);
        break;
      }
      case EventKind::StorageSet:
      case EventKind::StorageGet: {
        const auto& s = std::get<StorageAccessEvent>(ev.payload);
        require(s.actor.kind == StorageAccessEvent::Actor::Kind::Script ? scripts : requests,
                s.actor.id, line);
        break;
      }
    }
  }
  return diags;
}

PageTrace parse_trace(std::istream& in, const PublicSuffixList* suffixes) {
  PageTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw MalformedLine(line_no);
    }
    if (!obj.is_object()) throw MalformedLine(line_no, "expected a JSON object");
    Fields f(obj, line_no);
    const auto record = f.str("record");
    if (!have_header) {
      if (record != "page") throw SchemaViolation(line_no, "record");
      trace.page_url = f.str("page_url");
      trace.first_party = f.str("first_party");
      if (auto it = obj.find("page_id"); it != obj.end()) {
        if (!it->is_string()) throw SchemaViolation(line_no, "page_id");
        trace.page_id = it->get<std::string>();
      }
      have_header = true;
      continue;
    }
    if (record != "event") throw SchemaViolation(line_no, "record");
    trace.events.push_back(parse_event(obj, line_no));
  }
  if (!have_header) throw SchemaViolation(line_no == 0 ? 1 : line_no, "record");

  auto diags = validate_trace(trace, suffixes);
  for (const auto& d : diags) {
    if (d.rule == "DanglingReference") throw DanglingReference(d.line_no, d.detail);
  }
  if (!diags.empty()) {
    std::string msg = "trace validation failed:";
    for (const auto& d : diags) {
      msg += " [line " + std::to_string(d.line_no) + " " + d.rule + " " + d.detail + "]";
    }
    throw DataError(msg);
  }
  return trace;
}

PageTrace parse_trace(std::string_view text, const PublicSuffixList* suffixes) {
  std::istringstream in{std::string(text)};
  return parse_trace(in, suffixes);
}

PageTrace load_trace(const std::string& path, const PublicSuffixList* suffixes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read trace '" + path + "'");
  return parse_trace(in, suffixes);
}

std::string serialize_trace(const PageTrace& trace) {
  json header = {{"record", "page"}, {"page_url", trace.page_url},
                 {"first_party", trace.first_party}};
  if (!trace.page_id.empty()) header["page_id"] = trace.page_id;
  std::string out = header.dump() + "\n";
  for (const auto& ev : trace.events) out += event_to_json(ev).dump() + "\n";
  return out;
}

}  // namespace webgraph
