#include "webgraph/corpus.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "webgraph/digest.hpp"
#include "webgraph/errors.hpp"
#include "webgraph/io.hpp"
#include "webgraph/parallel.hpp"
#include "webgraph/public_suffix.hpp"
#include "webgraph/rng.hpp"
#include "webgraph/url.hpp"

namespace webgraph {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& tracker_domain_pool() {
  static const std::vector<std::string> pool = {
      "admetric.com",   "pixelcast.net",  "trackwise.io",   "clickmesh.com",  "beaconhub.net",
      "syncgrid.com",   "adloom.com",     "tagstream.net",  "audiencelab.io", "bidfuse.com",
      "metricpulse.com", "statsnode.net", "retargetly.com", "cookiebridge.net", "idmatch.io",
      "promoflux.com",  "insightbeam.net", "segmentix.com", "reachpoint.io",  "quantasync.com",
      "visitorgraph.net", "bannerbid.com", "oddlytics.io",  "userprint.net"};
  return pool;
}

const std::vector<std::string>& benign_domain_pool() {
  static const std::vector<std::string> pool = {
      "cdnlib.net",      "fontstatic.com", "videoplay.tv",   "mapserve.com",  "imgcache.net",
      "widgetry.io",     "commentbox.com", "jsmirror.net",   "paygate.com",   "bannerart.com",
      "sponsorwall.org", "pixelfonts.org", "chatassist.io",  "weatherfeed.net", "mediahost.tv",
      "searchbox.io"};
  return pool;
}

void validate_spec(const CorpusSpec& spec) {
  if (spec.n_pages == 0) throw DataError("n_pages must be at least 1");
  const std::pair<const char*, CountRange> ranges[] = {
      {"benign_resources", spec.benign_resources},
      {"benign_third_parties", spec.benign_third_parties},
      {"trackers", spec.trackers},
      {"beacons_per_tracker", spec.beacons_per_tracker},
      {"redirect_sync_pairs", spec.redirect_sync_pairs},
      {"query_sync_flows", spec.query_sync_flows},
      {"local_storage_writers", spec.local_storage_writers},
      {"benign_lookalikes", spec.benign_lookalikes}};
  for (const auto& [name, r] : ranges) {
    if (r.min > r.max) throw DataError(std::string("range '") + name + "' has min > max");
  }
  if (spec.trackers.max > tracker_domain_pool().size()) {
    throw DataError("trackers.max exceeds the tracker domain pool");
  }
  if (spec.benign_third_parties.max > benign_domain_pool().size()) {
    throw DataError("benign_third_parties.max exceeds the benign domain pool");
  }
  if (spec.beacons_per_tracker.min == 0 && spec.trackers.max > 0) {
    throw DataError("beacons_per_tracker.min must be at least 1");
  }
  if (!(spec.encoded_sync_fraction >= 0 && spec.encoded_sync_fraction <= 1)) {
    throw DataError("encoded_sync_fraction must lie in [0, 1]");
  }
  if (spec.id_length < 8) throw DataError("id_length must be at least 8");
}

namespace {

json range_json(const CountRange& r) { return json::array({r.min, r.max}); }

CountRange range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("count range must be [min, max]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace

json corpus_spec_to_json(const CorpusSpec& s) {
  return {{"n_pages", s.n_pages},
          {"seed", s.seed},
          {"benign_resources", range_json(s.benign_resources)},
          {"benign_third_parties", range_json(s.benign_third_parties)},
          {"trackers", range_json(s.trackers)},
          {"beacons_per_tracker", range_json(s.beacons_per_tracker)},
          {"redirect_sync_pairs", range_json(s.redirect_sync_pairs)},
          {"query_sync_flows", range_json(s.query_sync_flows)},
          {"local_storage_writers", range_json(s.local_storage_writers)},
          {"benign_lookalikes", range_json(s.benign_lookalikes)},
          {"encoded_sync_fraction", s.encoded_sync_fraction},
          {"id_length", s.id_length}};
}

CorpusSpec corpus_spec_from_json(const json& j) {
  try {
    CorpusSpec s;
    s.n_pages = j.value("n_pages", s.n_pages);
    s.seed = j.value("seed", s.seed);
    auto range = [&](const char* key, CountRange& r) {
      if (j.contains(key)) r = range_from(j.at(key));
    };
    range("benign_resources", s.benign_resources);
    range("benign_third_parties", s.benign_third_parties);
    range("trackers", s.trackers);
    range("beacons_per_tracker", s.beacons_per_tracker);
    range("redirect_sync_pairs", s.redirect_sync_pairs);
    range("query_sync_flows", s.query_sync_flows);
    range("local_storage_writers", s.local_storage_writers);
    range("benign_lookalikes", s.benign_lookalikes);
    s.encoded_sync_fraction = j.value("encoded_sync_fraction", s.encoded_sync_fraction);
    s.id_length = j.value("id_length", s.id_length);
    validate_spec(s);
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed corpus spec: ") + e.what());
  }
}

namespace {

std::size_t sample(Rng& rng, const CountRange& r) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(r.min),
                                                  static_cast<std::int64_t>(r.max)));
}

std::string first_label(const std::string& domain) { return domain.substr(0, domain.find('.')); }

/// Appends events with consecutive timestamps and records ground truth for
/// every request id it hands out.
class PageWriter {
 public:
  PageWriter(PageTrace& trace, GroundTruth& truth, const std::set<std::string>& trackers)
      : trace_(trace), truth_(truth), trackers_(trackers) {}

  std::string element(const std::string& tag, const std::optional<std::string>& by_script = {}) {
    ElementCreatedEvent e;
    e.element_id = "e" + std::to_string(++elements_);
    e.tag = tag;
    if (by_script) {
      e.creator.kind = ElementCreatedEvent::Creator::Kind::Script;
      e.creator.id = by_script;
    }
    push(EventKind::ElementCreated, e);
    return e.element_id;
  }

  void modify(const std::string& element_id, const std::string& script_id,
              const std::string& attribute) {
    push(EventKind::ElementModified, ElementModifiedEvent{element_id, script_id, attribute});
  }

  std::string request(const std::string& url, ResourceType type, Initiator initiator,
                      std::vector<std::string> cookie_keys = {}) {
    RequestEvent r;
    r.request_id = "r" + std::to_string(++requests_);
    r.url = url;
    r.resource_type = type;
    r.initiator = std::move(initiator);
    r.cookie_keys = std::move(cookie_keys);
    label(r.request_id, url);
    push(EventKind::Request, r);
    return r.request_id;
  }

  std::string element_request(const std::string& element_id, const std::string& url,
                              ResourceType type, std::vector<std::string> cookie_keys = {}) {
    return request(url, type, {Initiator::Kind::Element, element_id}, std::move(cookie_keys));
  }

  std::string script_request(const std::string& script_id, const std::string& url,
                             ResourceType type, std::vector<std::string> cookie_keys = {}) {
    return request(url, type, {Initiator::Kind::Script, script_id}, std::move(cookie_keys));
  }

  void response(const std::string& request_id, int status = 200,
                std::vector<StorageWrite> set_storage = {}) {
    push(EventKind::Response, ResponseEvent{request_id, status, std::move(set_storage)});
  }

  std::string redirect(const std::string& request_id, const std::string& to_url) {
    RedirectEvent r{request_id, "r" + std::to_string(++requests_), to_url};
    label(r.new_request_id, to_url);
    push(EventKind::Redirect, r);
    return r.new_request_id;
  }

  std::string script(const std::optional<std::string>& url,
                     const std::optional<std::string>& parent) {
    ScriptSourceEvent s;
    s.script_id = "s" + std::to_string(++scripts_);
    s.url = url;
    s.parent_element = parent;
    push(EventKind::ScriptSource, s);
    return s.script_id;
  }

  /// A parser- or script-inserted <script src> element, its fetch and source.
  std::string load_script(const std::string& url, const std::optional<std::string>& by_script = {}) {
    const auto el = element("script", by_script);
    const auto req = element_request(el, url, ResourceType::Script);
    response(req);
    return script(url, el);
  }

  void storage(EventKind kind, const std::string& script_id, StorageKind where,
               const std::string& key, const std::string& value) {
    StorageAccessEvent s;
    s.actor = {StorageAccessEvent::Actor::Kind::Script, script_id};
    s.storage = where;
    s.key = key;
    s.value = value;
    push(kind, s);
  }

 private:
  template <typename Payload>
  void push(EventKind kind, Payload payload) {
    PageLoadEvent ev;
    ev.ts = ++ts_;
    ev.kind = kind;
    ev.payload = std::move(payload);
    trace_.events.push_back(std::move(ev));
  }

  void label(const std::string& request_id, const std::string& url) {
    const auto parsed = parse_url(url);
    const auto site = parsed ? PublicSuffixList::bundled().site_of(parsed->host) : std::string();
    truth_.labels[request_id] = trackers_.count(site) ? Label::ATS : Label::NonATS;
  }

  PageTrace& trace_;
  GroundTruth& truth_;
  const std::set<std::string>& trackers_;
  std::int64_t ts_ = 0;
  std::size_t elements_ = 0, requests_ = 0, scripts_ = 0;
};

struct TrackerState {
  std::string domain;
  std::string label;
  std::string script_id;
  std::string cookie_key;
  std::string uid;
};

std::string encode_sync(Rng& rng, double fraction, const std::string& value) {
  if (!rng.bernoulli(fraction)) return value;
  switch (rng.uniform(3)) {
    case 0: return base64_encode(value);
    case 1: return md5_hex(value);
    default: return sha1_hex(value);
  }
}

const char* const kSiteWords[] = {"dailynews", "shopzone", "techhub",   "recipebox",
                                  "travelnow", "sportsdesk", "weatherly", "bookshelf",
                                  "musicbay",  "homegarden", "autotrader", "healthline"};
const char* const kSiteTlds[] = {"com", "com", "net", "org", "co.uk", "de"};
const char* const kImageWords[] = {"hero", "thumb", "logo", "photo", "avatar", "icon", "cover"};
const char* const kApiWords[] = {"items", "comments", "search", "related", "profile", "cart"};
const char* const kLookalikePaths[] = {"/assets/banner-{n}.jpg?size=728x90",
                                       "/sponsors/logo-{n}.png",
                                       "/blog/ads-policy-{n}.html",
                                       "/img/track-map-{n}.png",
                                       "/analytics-dashboard/app-{n}.js",
                                       "/promo/banner_{n}.gif?w=300x250"};
const char* const kBeaconPaths[] = {"/collect", "/px", "/event", "/b", "/hit", "/v1/log"};

std::string pick_word(Rng& rng, const char* const* words, std::size_t n) {
  return words[rng.uniform(n)];
}

template <std::size_t N>
std::string pick_word(Rng& rng, const char* const (&words)[N]) {
  return pick_word(rng, words, N);
}

std::string replace_n(std::string s, const std::string& n) {
  if (auto pos = s.find("{n}"); pos != std::string::npos) s.replace(pos, 3, n);
  return s;
}

}  // namespace

GeneratedPage generate_page(const CorpusSpec& spec, std::size_t page_index) {
  validate_spec(spec);
  Rng rng = Rng::derive(spec.seed, {page_index});
  GeneratedPage out;
  auto& trace = out.trace;
  auto& truth = out.truth;
  trace.page_id = "page_" + std::to_string(page_index);
  truth.page_id = trace.page_id;

  const std::string fp = pick_word(rng, kSiteWords) + std::to_string(page_index) + "." +
                         pick_word(rng, kSiteTlds);
  trace.first_party = fp;
  trace.page_url = "https://www." + fp + "/";
  const std::string fp_label = first_label(fp);

  // Sync flows need two distinct trackers.
  std::size_t n_trackers = sample(rng, spec.trackers);
  const std::size_t n_redirect = sample(rng, spec.redirect_sync_pairs);
  const std::size_t n_query = sample(rng, spec.query_sync_flows);
  if ((n_redirect > 0 || n_query > 0) && n_trackers < 2) n_trackers = 2;
  n_trackers = std::min(n_trackers, tracker_domain_pool().size());
  const std::size_t n_benign_tp = sample(rng, spec.benign_third_parties);
  const std::size_t n_benign = sample(rng, spec.benign_resources);
  const std::size_t n_lookalike = sample(rng, spec.benign_lookalikes);
  const std::size_t n_local = sample(rng, spec.local_storage_writers);

  auto tracker_pool = tracker_domain_pool();
  rng.shuffle(tracker_pool);
  tracker_pool.resize(n_trackers);
  auto benign_pool = benign_domain_pool();
  rng.shuffle(benign_pool);
  benign_pool.resize(n_benign_tp);

  const std::set<std::string> tracker_set(tracker_pool.begin(), tracker_pool.end());
  truth.tracker_domains.assign(tracker_set.begin(), tracker_set.end());
  PageWriter w(trace, truth, tracker_set);

  w.element("html");
  const std::string fp_host = "https://www." + fp;

  // First-party application scripts hold a session cookie that is sent back
  // to first-party endpoints but never embedded in a URL.
  const std::string session_key = fp_label + "_sess";
  std::vector<std::string> app_scripts;
  const std::size_t n_apps = 1 + rng.uniform(2);
  for (std::size_t i = 0; i < n_apps; ++i) {
    app_scripts.push_back(
        w.load_script(fp_host + "/static/app." + rng.token(8) + ".js"));
  }
  w.storage(EventKind::StorageSet, app_scripts[0], StorageKind::Cookie, session_key,
            rng.alnum(spec.id_length));
  w.storage(EventKind::StorageSet, app_scripts.back(), StorageKind::Local, "theme",
            rng.bernoulli(0.5) ? "dark" : "light");
  {
    const auto req = w.script_request(app_scripts[0], fp_host + "/api/session", ResourceType::Xhr,
                                      {session_key});
    w.response(req, 200, {{StorageKind::Cookie, "csrf_token", rng.alnum(12)}});
  }

  const char* const fp_subdomains[] = {"www", "static", "img", "cdn", "media"};
  for (std::size_t i = 0; i < n_benign; ++i) {
    const std::string host = "https://" + pick_word(rng, fp_subdomains) + "." + fp;
    const auto roll = rng.uniform(10);
    if (roll < 5) {
      const bool dynamic = rng.bernoulli(0.3);
      const std::optional<std::string> by =
          dynamic ? std::optional<std::string>(rng.pick(app_scripts)) : std::nullopt;
      const auto el = w.element("img", by);
      if (dynamic) w.modify(el, *by, "src");
      const auto req = w.element_request(
          el, host + "/images/" + pick_word(rng, kImageWords) + "-" + rng.token(5) + ".jpg",
          ResourceType::Image);
      w.response(req);
    } else if (roll < 7) {
      const auto el = w.element("link");
      w.response(w.element_request(el, host + "/css/" + rng.token(6) + ".css",
                                   ResourceType::Stylesheet));
    } else if (roll < 9) {
      const auto& s = rng.pick(app_scripts);
      const auto req = w.script_request(
          s,
          fp_host + "/api/" + pick_word(rng, kApiWords) + "?page=" +
              std::to_string(1 + rng.uniform(9)) + "&lang=en",
          ResourceType::Xhr, {session_key});
      w.response(req);
      w.storage(EventKind::StorageGet, s, StorageKind::Local, "theme", "light");
    } else {
      const auto sid = w.load_script(host + "/js/" + rng.token(6) + ".js");
      const auto div = w.element("div", sid);
      w.modify(div, sid, "class");
    }
  }

  // Benign third parties: libraries, fonts and embeds.
  std::vector<std::pair<std::string, std::string>> benign_scripts;  // domain, script id
  for (const auto& domain : benign_pool) {
    const auto roll = rng.uniform(3);
    if (roll == 0) {
      const auto el = w.element("link");
      w.response(w.element_request(el, "https://fonts." + domain + "/css?family=" + rng.token(6),
                                   ResourceType::Stylesheet));
      continue;
    }
    const auto sid = w.load_script("https://cdn." + domain + "/lib/" + rng.token(6) + ".min.js");
    benign_scripts.push_back({domain, sid});
    const std::size_t widgets = rng.uniform(3);
    for (std::size_t k = 0; k < widgets; ++k) {
      const bool frame = rng.bernoulli(0.4);
      const auto el = w.element(frame ? "iframe" : "img", sid);
      w.modify(el, sid, "src");
      const auto url = frame ? "https://" + domain + "/embed/" + rng.token(8) + "?w=640&h=360"
                             : "https://img." + domain + "/t/" + rng.token(8) + ".jpg";
      const auto req =
          w.element_request(el, url, frame ? ResourceType::Iframe : ResourceType::Image);
      std::vector<StorageWrite> sets;
      if (frame && rng.bernoulli(0.5)) {
        sets.push_back({StorageKind::Cookie, first_label(domain) + "_pref", "lang-en"});
      }
      w.response(req, 200, std::move(sets));
    }
    if (rng.bernoulli(0.3)) {
      w.storage(EventKind::StorageSet, sid, StorageKind::Local, first_label(domain) + "_cache",
                "v" + std::to_string(rng.uniform(100)));
    }
  }

  // Benign URLs that look like ads to a keyword matcher.
  for (std::size_t i = 0; i < n_lookalike; ++i) {
    const std::string path = replace_n(pick_word(rng, kLookalikePaths), rng.token(4));
    std::string url;
    if (!benign_scripts.empty() && rng.bernoulli(0.4)) {
      url = "https://" + rng.pick(benign_scripts).first + path;
    } else {
      url = "https://" + pick_word(rng, fp_subdomains) + "." + fp + path;
    }
    const bool is_js = path.find(".js") != std::string::npos;
    if (is_js) {
      w.load_script(url);
    } else {
      const auto el = w.element("img");
      w.response(w.element_request(el, url, ResourceType::Image));
    }
  }

  // Trackers: a tag script, an identifier cookie and identifier beacons.
  std::vector<TrackerState> trackers;
  for (const auto& domain : tracker_pool) {
    TrackerState t;
    t.domain = domain;
    t.label = first_label(domain);
    t.cookie_key = t.label + "_uid";
    t.uid = rng.alnum(spec.id_length);
    const bool injected = rng.bernoulli(0.3);
    const std::optional<std::string> by =
        injected ? std::optional<std::string>(app_scripts[0]) : std::nullopt;
    const char* const tag_hosts[] = {"tag.", "js.", "cdn.", ""};
    t.script_id = w.load_script("https://" + pick_word(rng, tag_hosts) + domain + "/" +
                                    rng.token(5) + ".js",
                                by);
    if (rng.bernoulli(0.5)) {
      // Set-Cookie on a first pixel.
      const auto el = w.element("img", t.script_id);
      w.modify(el, t.script_id, "src");
      const auto req = w.element_request(
          el, "https://" + domain + "/init?cb=" + rng.token(6), ResourceType::Image);
      w.response(req, 200, {{StorageKind::Cookie, t.cookie_key, t.uid}});
    } else {
      w.storage(EventKind::StorageSet, t.script_id, StorageKind::Cookie, t.cookie_key, t.uid);
    }
    const std::size_t beacons = sample(rng, spec.beacons_per_tracker);
    for (std::size_t b = 0; b < beacons; ++b) {
      const std::string url = "https://" + domain + pick_word(rng, kBeaconPaths) +
                              "?uid=" + t.uid + "&ev=" + (b == 0 ? "pageview" : "e" + rng.token(3)) +
                              "&r=" + rng.token(6);
      if (rng.bernoulli(0.5)) {
        const auto el = w.element("img", t.script_id);
        w.modify(el, t.script_id, "src");
        w.response(w.element_request(el, url, ResourceType::Image, {t.cookie_key}));
      } else {
        w.response(w.script_request(t.script_id, url, ResourceType::Xhr, {t.cookie_key}));
      }
    }
    trackers.push_back(std::move(t));
  }

  // Cookie sync through a redirect: A's pixel bounces to B with A's id.
  for (std::size_t i = 0; i < n_redirect && trackers.size() >= 2; ++i) {
    const auto a = rng.uniform(trackers.size());
    auto b = rng.uniform(trackers.size() - 1);
    if (b >= a) ++b;
    const auto& ta = trackers[a];
    const auto& tb = trackers[b];
    const auto el = w.element("img", ta.script_id);
    w.modify(el, ta.script_id, "src");
    const auto req = w.element_request(
        el, "https://" + ta.domain + "/sync?partner=" + tb.label + "&uid=" + ta.uid,
        ResourceType::Image, {ta.cookie_key});
    w.response(req, 302);
    std::string target = "https://" + tb.domain + "/match?" + ta.label +
                         "_uid=" + encode_sync(rng, spec.encoded_sync_fraction, ta.uid);
    const auto hop = w.redirect(req, target);
    if (rng.bernoulli(0.3)) {
      // A second hop back through the partner's own endpoint.
      w.response(hop, 302);
      const auto hop2 = w.redirect(
          hop, "https://" + tb.domain + "/setuid?uid=" + tb.uid + "&src=" + ta.label);
      w.response(hop2, 200, {{StorageKind::Cookie, tb.cookie_key, tb.uid}});
    } else {
      w.response(hop, 200, {{StorageKind::Cookie, tb.cookie_key, tb.uid}});
    }
  }

  // Cookie sync through the query string: C reads A's cookie and ships it.
  for (std::size_t i = 0; i < n_query && trackers.size() >= 2; ++i) {
    const auto a = rng.uniform(trackers.size());
    auto c = rng.uniform(trackers.size() - 1);
    if (c >= a) ++c;
    const auto& ta = trackers[a];
    const auto& tc = trackers[c];
    w.storage(EventKind::StorageGet, tc.script_id, StorageKind::Cookie, ta.cookie_key, ta.uid);
    const auto url = "https://" + tc.domain + "/ingest?ext_id=" +
                     encode_sync(rng, spec.encoded_sync_fraction, ta.uid) + "&partner=" + ta.label;
    w.response(w.script_request(tc.script_id, url, ResourceType::Xhr, {tc.cookie_key}));
  }

  for (std::size_t i = 0; i < n_local && !trackers.empty(); ++i) {
    const auto& t = rng.pick(trackers);
    const std::string key = t.label + "_lsid" + std::to_string(i);
    const std::string lsid = rng.alnum(spec.id_length);
    w.storage(EventKind::StorageSet, t.script_id, StorageKind::Local, key, lsid);
    w.storage(EventKind::StorageGet, t.script_id, StorageKind::Local, key, lsid);
    w.response(w.script_request(t.script_id, "https://" + t.domain + "/ls?lsid=" + lsid,
                                ResourceType::Xhr));
  }

  // Layout-only elements keep the HTML layer from being all resources.
  const std::size_t divs = rng.uniform(8);
  for (std::size_t i = 0; i < divs; ++i) {
    const auto el = w.element(rng.bernoulli(0.5) ? "div" : "section");
    if (rng.bernoulli(0.3)) w.modify(el, rng.pick(app_scripts), "style");
  }
  return out;
}

std::string rules_for_domains(std::vector<std::string> domains) {
  std::sort(domains.begin(), domains.end());
  domains.erase(std::unique(domains.begin(), domains.end()), domains.end());
  std::string out = "! generated: one domain anchor per tracker domain\n";
  for (const auto& d : domains) out += "||" + d + "^\n";
  return out;
}

CorpusSummary generate_corpus(const CorpusSpec& spec, const fs::path& dir, std::size_t jobs) {
  validate_spec(spec);
  std::vector<GeneratedPage> pages(spec.n_pages);
  parallel_for(spec.n_pages, jobs, [&](std::size_t i) { pages[i] = generate_page(spec, i); });

  CorpusSummary summary;
  std::set<std::string> domains;
  json manifest_pages = json::array();
  std::string labels = "page_id,request_id,label\n";
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const auto& p = pages[i];
    const auto file = "pages/" + p.trace.page_id + ".jsonl";
    write_file_atomic(dir / file, serialize_trace(p.trace));
    std::size_t ats = 0;
    for (const auto& [rid, label] : p.truth.labels) {
      labels += p.trace.page_id + "," + rid + "," + std::string(to_string(label)) + "\n";
      if (label == Label::ATS) ++ats;
    }
    summary.requests += p.truth.labels.size();
    summary.ats_requests += ats;
    domains.insert(p.truth.tracker_domains.begin(), p.truth.tracker_domains.end());
    manifest_pages.push_back({{"page_id", p.trace.page_id},
                              {"file", file},
                              {"first_party", p.trace.first_party},
                              {"requests", p.truth.labels.size()},
                              {"ats_requests", ats},
                              {"tracker_domains", p.truth.tracker_domains}});
  }
  summary.pages = pages.size();
  summary.tracker_domains.assign(domains.begin(), domains.end());

  const json manifest = {{"spec", corpus_spec_to_json(spec)},
                         {"pages", manifest_pages},
                         {"tracker_domains", summary.tracker_domains},
                         {"requests", summary.requests},
                         {"ats_requests", summary.ats_requests}};
  write_file_atomic(dir / "labels.csv", labels);
  write_file_atomic(dir / "rules.txt", rules_for_domains(summary.tracker_domains));
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

std::vector<CorpusPageEntry> read_manifest(const fs::path& dir) {
  const auto text = read_file(dir / "manifest.json");
  try {
    const auto j = json::parse(text);
    std::vector<CorpusPageEntry> out;
    for (const auto& p : j.at("pages")) {
      out.push_back({p.at("page_id").get<std::string>(), p.at("file").get<std::string>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest '" + (dir / "manifest.json").string() + "': " + e.what());
  }
}

std::map<std::string, std::map<std::string, Label>> read_ground_truth(const fs::path& labels_csv) {
  const auto lines = split_lines(read_file(labels_csv));
  if (lines.empty() || lines[0] != "page_id,request_id,label") {
    throw DataError("'" + labels_csv.string() + "' is not a ground-truth label file");
  }
  std::map<std::string, std::map<std::string, Label>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3 || (cells[2] != "ATS" && cells[2] != "NonATS")) {
      throw DataError("labels line " + std::to_string(i + 1) + " is malformed");
    }
    out[cells[0]][cells[1]] = cells[2] == "ATS" ? Label::ATS : Label::NonATS;
  }
  return out;
}

}  // namespace webgraph
