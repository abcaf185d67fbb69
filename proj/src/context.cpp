#include "sessio/context.hpp"

#include <algorithm>
#include <sstream>

namespace sessio {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

const PayloadPtr* TypeContext::find(const std::string& id) const {
  for (const auto& [n, t] : entries_)
    if (n == id) return &t;
  return nullptr;
}

TypeContext TypeContext::empty_like() const {
  TypeContext out = *this;
  out.entries_.clear();
  return out;
}

TypeContext TypeContext::with(const std::string& id, PayloadPtr t) const {
  TypeContext out = *this;
  out.entries_.push_back({id, std::move(t)});
  return out;
}

TypeContext TypeContext::replaced(const std::string& id, PayloadPtr t) const {
  TypeContext out = *this;
  for (auto& [n, ty] : out.entries_)
    if (n == id) {
      ty = std::move(t);
      return out;
    }
  out.entries_.push_back({id, std::move(t)});
  return out;
}

TypeContext TypeContext::without(const std::string& id) const {
  TypeContext out = *this;
  out.entries_.erase(
      std::remove_if(out.entries_.begin(), out.entries_.end(),
                     [&](const auto& e) { return e.first == id; }),
      out.entries_.end());
  return out;
}

std::string TypeContext::fingerprint() const {
  std::vector<std::string> parts;
  parts.reserve(entries_.size());
  for (const auto& [n, t] : entries_) parts.push_back(n + ":" + to_string(t));
  std::sort(parts.begin(), parts.end());
  std::ostringstream os;
  for (const auto& p : parts) os << p << ";";
  return os.str();
}

bool context_un(const TypeContext& g, const TypeOptions& opts, bool discharge_terminated) {
  for (const auto& [n, t] : g.entries()) {
    bool ok = std::visit(
        overloaded{
            [](const PayloadType::Base&) { return true; },
            [&](const PayloadType::Endpoint& e) {
              auto q = try_qualifier_of(e.type);
              if (q && *q == Qualifier::Un) return true;
              return discharge_terminated && terminated(e.type, opts);
            },
            [&](const PayloadType::Session& s) {
              auto q1 = try_qualifier_of(s.first);
              auto q2 = try_qualifier_of(s.second);
              if (q1 && q2 && *q1 == Qualifier::Un && *q2 == Qualifier::Un) return true;
              return discharge_terminated && terminated(s.first, opts) && terminated(s.second, opts);
            },
        },
        t->v);
    if (!ok) return false;
  }
  return true;
}

std::vector<std::pair<TypeContext, TypeContext>> ctx_split(const TypeContext& g) {
  // per-entry placement choices
  enum class Opt { Both, Left, Right, PairLeft, PairRight, SplitFwd, SplitRev };
  std::vector<std::vector<Opt>> options;
  for (const auto& [n, t] : g.entries()) {
    std::vector<Opt> opts = std::visit(
        overloaded{
            [](const PayloadType::Base&) { return std::vector<Opt>{Opt::Both}; },
            [](const PayloadType::Endpoint& e) {
              auto q = try_qualifier_of(e.type);
              if (q && *q == Qualifier::Un) return std::vector<Opt>{Opt::Both};
              return std::vector<Opt>{Opt::Left, Opt::Right};
            },
            [](const PayloadType::Session& s) {
              auto q1 = try_qualifier_of(s.first);
              auto q2 = try_qualifier_of(s.second);
              if (!q1 || !q2) return std::vector<Opt>{};
              if (*q1 == Qualifier::Un && *q2 == Qualifier::Un)
                return std::vector<Opt>{Opt::Both};
              if (*q1 == Qualifier::Lin && *q2 == Qualifier::Lin)
                return std::vector<Opt>{Opt::PairLeft, Opt::PairRight, Opt::SplitFwd, Opt::SplitRev};
              return std::vector<Opt>{};  // mixed pairs have no split rule
            },
        },
        t->v);
    if (opts.empty()) return {};
    options.push_back(std::move(opts));
  }

  std::vector<std::pair<TypeContext, TypeContext>> out;
  std::vector<size_t> idx(options.size(), 0);
  for (;;) {
    TypeContext l = g.empty_like();
    TypeContext r = g.empty_like();
    for (size_t i = 0; i < options.size(); ++i) {
      const auto& [n, t] = g.entries()[i];
      const auto* sess = std::get_if<PayloadType::Session>(&t->v);
      switch (options[i][idx[i]]) {
        case Opt::Both:
          l = l.with(n, t);
          r = r.with(n, t);
          break;
        case Opt::Left:
        case Opt::PairLeft: l = l.with(n, t); break;
        case Opt::Right:
        case Opt::PairRight: r = r.with(n, t); break;
        case Opt::SplitFwd:
          l = l.with(n, mk_endpoint(sess->first));
          r = r.with(n, mk_endpoint(sess->second));
          break;
        case Opt::SplitRev:
          l = l.with(n, mk_endpoint(sess->second));
          r = r.with(n, mk_endpoint(sess->first));
          break;
      }
    }
    out.push_back({std::move(l), std::move(r)});
    // odometer
    size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (++idx[i] < options[i].size()) break;
      idx[i] = 0;
    }
    if (i == idx.size()) break;
  }
  return out;
}

bool type_equiv(const TypePtr& a, const TypePtr& b, const CheckConfig& cfg) {
  if (type_equal(a, b)) return true;
  if (cfg.mode == CheckMode::Plain) return false;
  if (!type_closed(a) || !type_closed(b) || !is_guarded(a) || !is_guarded(b)) return false;
  return bisimilar(a, b, cfg.type_opts, cfg.bisim_budget).bisimilar();
}

bool payload_equiv(const PayloadPtr& a, const PayloadPtr& b, const CheckConfig& cfg) {
  if (a->v.index() != b->v.index()) return false;
  return std::visit(
      overloaded{
          [&](const PayloadType::Base& x) {
            return x.name == std::get<PayloadType::Base>(b->v).name;
          },
          [&](const PayloadType::Endpoint& x) {
            return type_equiv(x.type, std::get<PayloadType::Endpoint>(b->v).type, cfg);
          },
          [&](const PayloadType::Session& x) {
            const auto& y = std::get<PayloadType::Session>(b->v);
            return type_equiv(x.first, y.first, cfg) && type_equiv(x.second, y.second, cfg);
          },
      },
      a->v);
}

std::variant<TypeContext, UpdateError> ctx_update(const TypeContext& g, const std::string& id,
                                                  const PayloadPtr& t, const CheckConfig& cfg) {
  const PayloadPtr* existing = g.find(id);
  if (!existing) return g.with(id, t);
  const auto* old_ep = std::get_if<PayloadType::Endpoint>(&(*existing)->v);
  const auto* new_ep = std::get_if<PayloadType::Endpoint>(&t->v);
  if (!old_ep || !new_ep)
    return UpdateError{"cannot update " + id + " from " + to_string(*existing) + " to " +
                       to_string(t)};
  auto q = try_qualifier_of(old_ep->type);
  if (q && *q == Qualifier::Un) {
    if (!type_equiv(old_ep->type, new_ep->type, cfg))
      return UpdateError{"unrestricted " + id + " cannot change type from " +
                         to_string(old_ep->type) + " to " + to_string(new_ep->type)};
    return g;
  }
  return g.replaced(id, t);
}

bool session_balanced(const SessionType& s, const CheckConfig& cfg, std::string* reason) {
  if (type_equal(dual(s.first), s.second)) return true;
  if (cfg.mode == CheckMode::Quotient) {
    if (!type_closed(s.first) || !type_closed(s.second) || !is_guarded(s.first) ||
        !is_guarded(s.second)) {
      if (reason) *reason = "session endpoints must be closed and guarded";
      return false;
    }
    BisimResult r = bisimilar(dual(s.first), s.second, cfg.type_opts, cfg.bisim_budget);
    if (r.bisimilar()) return true;
    if (reason)
      *reason = r.verdict == BisimResult::Verdict::Unknown
                    ? "duality undecided within budget"
                    : "endpoints are not dual";
    return false;
  }
  if (reason) *reason = "endpoints are not structurally dual";
  return false;
}

bool check_balanced(const TypeContext& g, const CheckConfig& cfg, std::string* reason) {
  for (const auto& [n, t] : g.entries()) {
    if (const auto* s = std::get_if<PayloadType::Session>(&t->v)) {
      std::string why;
      if (!session_balanced(SessionType{s->first, s->second}, cfg, &why)) {
        if (reason) *reason = n + ": " + why;
        return false;
      }
    }
  }
  return true;
}

}  // namespace sessio
