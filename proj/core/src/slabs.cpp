#include "authorlink/slabs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "authorlink/common.hpp"

namespace authorlink {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && (r < 0) != (b < 0)) ? q - 1 : q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

// Howard Hinnant's civil-from-days; returns month 1..12.
unsigned civil_month(std::int64_t days) {
    std::int64_t z = days + 719468;
    std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    return mp < 10 ? mp + 3 : mp - 9;
}

constexpr std::int64_t kDay = 86400;

}  // namespace

void validate_facet(const TemporalFacet& f) {
    if (f.name == "day") {
        if (f.splits != 7) throw UsageError("day facet requires 7 splits");
    } else if (f.name == "hour") {
        if (f.splits < 2 || f.splits > 86400)
            throw UsageError("hour facet splits must be in [2, 86400]");
    } else if (f.name == "week") {
        if (f.splits < 2) throw UsageError("week facet requires at least 2 splits");
    } else if (f.name == "month") {
        if (f.splits < 2 || f.splits > 12)
            throw UsageError("month facet splits must be in [2, 12]");
    } else {
        throw UsageError("unknown facet: " + f.name);
    }
    if (f.threshold < 0.0 || f.threshold > 1.0)
        throw UsageError("facet threshold must be in [0, 1]");
}

int split_of(const TemporalFacet& f, std::int64_t ts, std::int64_t tz_offset) {
    std::int64_t local = ts + tz_offset;
    if (f.name == "day") {
        return static_cast<int>(floor_mod(floor_div(local, kDay) + 3, 7));  // 0 = Monday
    }
    if (f.name == "hour") {
        std::int64_t sec = floor_mod(local, kDay);
        return static_cast<int>(sec * f.splits / kDay);
    }
    if (f.name == "week") {
        return static_cast<int>(floor_mod(floor_div(local, 7 * kDay), f.splits));
    }
    if (f.name == "month") {
        unsigned m = civil_month(floor_div(local, kDay));
        return static_cast<int>((m - 1) % static_cast<unsigned>(f.splits));
    }
    throw UsageError("unknown facet: " + f.name);
}

SplitProfiles build_split_profiles(const MessageSet& set, const Vocabulary& vocab,
                                   const TemporalFacet& facet, std::int64_t tz_offset,
                                   const MessageFilter& filter) {
    validate_facet(facet);
    const int S = facet.splits;
    SplitProfiles p;
    p.splits = S;
    p.weights.resize(S);
    p.message_counts.assign(S, 0);

    std::vector<std::unordered_map<std::uint32_t, std::uint64_t>> freq(S);
    for (const Message& m : set.messages()) {
        if (filter && !filter(m)) continue;
        int s = split_of(facet, m.timestamp, tz_offset);
        ++p.message_counts[s];
        for (const std::string& tok : m.tokens)
            if (auto id = vocab.index(tok)) ++freq[s][static_cast<std::uint32_t>(*id)];
    }

    std::unordered_map<std::uint32_t, int> df;
    for (int s = 0; s < S; ++s)
        for (const auto& [t, c] : freq[s]) ++df[t];

    for (int s = 0; s < S; ++s) {
        std::uint64_t maxf = 0;
        for (const auto& [t, c] : freq[s]) maxf = std::max(maxf, c);
        if (maxf == 0) continue;
        auto& row = p.weights[s];
        row.reserve(freq[s].size());
        for (const auto& [t, c] : freq[s]) {
            double w = (static_cast<double>(c) / static_cast<double>(maxf)) *
                       std::log(static_cast<double>(S) / static_cast<double>(df[t]));
            if (w != 0.0) row.emplace_back(t, w);
        }
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return p;
}

SimilarityGrid similarity_grid(const SplitProfiles& profiles) {
    const int n = profiles.splits;
    SimilarityGrid g;
    g.n = n;
    g.data.assign(static_cast<std::size_t>(n) * n, 0.0);

    std::vector<double> norms(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (const auto& [t, w] : profiles.weights[i]) s += w * w;
        norms[i] = std::sqrt(s);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double sim = 0.0;
            if (norms[i] > 0 && norms[j] > 0) {
                double d = 0.0;
                const auto& a = profiles.weights[i];
                const auto& b = profiles.weights[j];
                std::size_t x = 0, y = 0;
                while (x < a.size() && y < b.size()) {
                    if (a[x].first < b[y].first)
                        ++x;
                    else if (a[x].first > b[y].first)
                        ++y;
                    else {
                        d += a[x].second * b[y].second;
                        ++x;
                        ++y;
                    }
                }
                sim = d / (norms[i] * norms[j]);
            }
            g.at(i, j) = sim;
            g.at(j, i) = sim;
        }
    }
    return g;
}

std::vector<std::vector<int>> hac_complete_linkage(const SimilarityGrid& grid, double threshold) {
    const int n = grid.n;
    std::vector<std::vector<int>> clusters(n);
    for (int i = 0; i < n; ++i) clusters[i] = {i};
    if (n == 0) return {};

    std::vector<std::vector<double>> link(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) link[i][j] = grid.at(i, j);
    std::vector<bool> alive(n, true);

    for (;;) {
        int bi = -1, bj = -1;
        double best = -std::numeric_limits<double>::infinity();
        int best_lo = 0, best_hi = 0;
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                double L = link[i][j];
                int lo = std::min(clusters[i][0], clusters[j][0]);
                int hi = std::max(clusters[i][0], clusters[j][0]);
                bool better = L > best || (L == best && (lo < best_lo ||
                                                         (lo == best_lo && hi < best_hi)));
                if (bi < 0 || better) {
                    best = L;
                    bi = i;
                    bj = j;
                    best_lo = lo;
                    best_hi = hi;
                }
            }
        }
        if (bi < 0 || best < threshold) break;

        std::vector<int> merged;
        std::merge(clusters[bi].begin(), clusters[bi].end(), clusters[bj].begin(),
                   clusters[bj].end(), std::back_inserter(merged));
        clusters[bi] = std::move(merged);
        alive[bj] = false;
        for (int k = 0; k < n; ++k) {
            if (!alive[k] || k == bi) continue;
            double L = std::min(link[bi][k], link[bj][k]);
            link[bi][k] = L;
            link[k][bi] = L;
        }
    }

    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i)
        if (alive[i]) out.push_back(std::move(clusters[i]));
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
    return out;
}

std::string SlabContext::key(const std::vector<TemporalFacet>& facets) const {
    std::string k = facets[facet].name;
    for (const PathStep& st : path)
        k += "@" + facets[st.facet].name + "." + std::to_string(st.slab);
    return k;
}

int SlabHierarchy::facet_index(std::string_view name) const {
    for (std::size_t i = 0; i < facets.size(); ++i)
        if (facets[i].name == name) return static_cast<int>(i);
    throw UsageError("unknown facet: " + std::string(name));
}

std::vector<int> SlabHierarchy::contexts_of_facet(int facet) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < contexts.size(); ++i)
        if (contexts[i].facet == facet) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> SlabHierarchy::children_of(int facet) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < facets.size(); ++i)
        if (facets[i].parent && *facets[i].parent == facets[facet].name)
            out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> SlabHierarchy::root_facets() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < facets.size(); ++i)
        if (!facets[i].parent) out.push_back(static_cast<int>(i));
    return out;
}

bool SlabHierarchy::context_contains(const SlabContext& ctx, std::int64_t ts) const {
    for (const PathStep& st : ctx.path) {
        int s = split_of(facets[st.facet], ts, tz_offset);
        if (!std::binary_search(st.slab_splits.begin(), st.slab_splits.end(), s)) return false;
    }
    return true;
}

int SlabHierarchy::slab_of(const SlabContext& ctx, std::int64_t ts) const {
    int s = split_of(facets[ctx.facet], ts, tz_offset);
    return ctx.split_to_slab[s];
}

std::size_t SlabHierarchy::total_slabs() const {
    std::size_t n = 0;
    for (const auto& c : contexts) n += c.slabs.size();
    return n;
}

namespace {

std::vector<TemporalFacet> order_facets(std::vector<TemporalFacet> facets) {
    if (facets.empty()) throw UsageError("at least one facet is required");
    for (const auto& f : facets) validate_facet(f);
    for (std::size_t i = 0; i < facets.size(); ++i)
        for (std::size_t j = i + 1; j < facets.size(); ++j)
            if (facets[i].name == facets[j].name)
                throw UsageError("duplicate facet name: " + facets[i].name);

    std::vector<TemporalFacet> ordered;
    std::vector<bool> placed(facets.size(), false);
    auto is_placed = [&](const std::string& name) {
        for (const auto& f : ordered)
            if (f.name == name) return true;
        return false;
    };
    while (ordered.size() < facets.size()) {
        bool progress = false;
        for (std::size_t i = 0; i < facets.size(); ++i) {
            if (placed[i]) continue;
            if (!facets[i].parent || is_placed(*facets[i].parent)) {
                ordered.push_back(facets[i]);
                placed[i] = true;
                progress = true;
            }
        }
        if (!progress) throw UsageError("facet parents form a cycle or name a missing facet");
    }
    return ordered;
}

void finish_context(SlabContext& ctx, const TemporalFacet& facet, const SplitProfiles& prof) {
    std::vector<int> populated;
    for (int s = 0; s < prof.splits; ++s)
        if (prof.message_counts[s] > 0) populated.push_back(s);
    if (populated.empty()) throw DataError("facet " + facet.name + " has no messages in context");

    SimilarityGrid sub;
    sub.n = static_cast<int>(populated.size());
    sub.data.assign(static_cast<std::size_t>(sub.n) * sub.n, 0.0);
    for (int i = 0; i < sub.n; ++i)
        for (int j = 0; j < sub.n; ++j) sub.at(i, j) = ctx.grid.at(populated[i], populated[j]);

    auto groups = hac_complete_linkage(sub, facet.threshold);
    ctx.slabs.clear();
    for (auto& g : groups) {
        Slab sl;
        for (int local : g) sl.splits.push_back(populated[local]);
        std::sort(sl.splits.begin(), sl.splits.end());
        ctx.slabs.push_back(std::move(sl));
    }

    // attach empty splits to the slab of the nearest populated split
    for (int s = 0; s < prof.splits; ++s) {
        if (prof.message_counts[s] > 0) continue;
        int nearest = populated[0];
        for (int p : populated) {
            int d = std::abs(p - s), dn = std::abs(nearest - s);
            if (d < dn || (d == dn && p < nearest)) nearest = p;
        }
        for (auto& sl : ctx.slabs) {
            if (std::binary_search(sl.splits.begin(), sl.splits.end(), nearest)) {
                sl.splits.insert(std::lower_bound(sl.splits.begin(), sl.splits.end(), s), s);
                break;
            }
        }
    }
    std::sort(ctx.slabs.begin(), ctx.slabs.end(),
              [](const Slab& a, const Slab& b) { return a.splits[0] < b.splits[0]; });

    ctx.split_to_slab.assign(prof.splits, -1);
    for (std::size_t k = 0; k < ctx.slabs.size(); ++k)
        for (int s : ctx.slabs[k].splits) ctx.split_to_slab[s] = static_cast<int>(k);
    ctx.split_message_counts = prof.message_counts;
}

}  // namespace

SlabHierarchy build_slab_hierarchy(const MessageSet& set, const Vocabulary& vocab,
                                   std::vector<TemporalFacet> facets, std::int64_t tz_offset) {
    SlabHierarchy h;
    h.facets = order_facets(std::move(facets));
    h.tz_offset = tz_offset;
    if (set.size() == 0) throw DataError("corpus has no messages");

    for (int fi = 0; fi < static_cast<int>(h.facets.size()); ++fi) {
        const TemporalFacet& facet = h.facets[fi];
        std::vector<std::vector<PathStep>> paths;
        if (!facet.parent) {
            paths.push_back({});
        } else {
            int pfi = h.facet_index(*facet.parent);
            for (int ci : h.contexts_of_facet(pfi)) {
                const SlabContext& pctx = h.contexts[ci];
                for (std::size_t si = 0; si < pctx.slabs.size(); ++si) {
                    std::vector<PathStep> path = pctx.path;
                    path.push_back(PathStep{pfi, static_cast<int>(si), pctx.slabs[si].splits});
                    paths.push_back(std::move(path));
                }
            }
        }
        for (auto& path : paths) {
            SlabContext ctx;
            ctx.facet = fi;
            ctx.path = std::move(path);
            MessageFilter filter = nullptr;
            if (!ctx.path.empty()) {
                const SlabContext* cp = &ctx;
                const SlabHierarchy* hp = &h;
                filter = [hp, cp](const Message& m) { return hp->context_contains(*cp, m.timestamp); };
            }
            SplitProfiles prof = build_split_profiles(set, vocab, facet, tz_offset, filter);
            ctx.grid = similarity_grid(prof);
            finish_context(ctx, facet, prof);
            h.contexts.push_back(std::move(ctx));
        }
    }
    return h;
}

void save_slabs(const SlabHierarchy& h, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write slab file: " + file.string());
    out << "authorlink-slabs 1\n";
    out << "tz_offset " << h.tz_offset << "\n";
    for (const auto& f : h.facets)
        out << "facet " << f.name << ' ' << f.splits << ' ' << dtos(f.threshold) << ' '
            << (f.parent ? *f.parent : std::string("-")) << "\n";
    for (const auto& ctx : h.contexts) {
        out << "context " << ctx.key(h.facets) << ' ' << h.facets[ctx.facet].name << "\n";
        out << "path";
        if (ctx.path.empty()) out << " -";
        for (const auto& st : ctx.path) {
            out << ' ' << h.facets[st.facet].name << ':' << st.slab << ':';
            for (std::size_t i = 0; i < st.slab_splits.size(); ++i) {
                if (i) out << ',';
                out << st.slab_splits[i];
            }
        }
        out << "\n";
        out << "counts";
        for (auto c : ctx.split_message_counts) out << ' ' << c;
        out << "\n";
        for (const auto& sl : ctx.slabs) {
            out << "slab";
            for (int s : sl.splits) out << ' ' << s;
            out << "\n";
        }
        out << "end\n";
    }
}

SlabHierarchy load_slabs(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open slab file: " + file.string());
    SlabHierarchy h;
    std::string line;
    if (!std::getline(in, line) || line != "authorlink-slabs 1")
        throw DataError("bad slab file header: " + file.string());
    SlabContext* cur = nullptr;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "tz_offset") {
            ss >> h.tz_offset;
        } else if (tag == "facet") {
            TemporalFacet f;
            std::string parent, thr;
            ss >> f.name >> f.splits >> thr >> parent;
            f.threshold = stod_strict(thr, "threshold");
            if (parent != "-") f.parent = parent;
            h.facets.push_back(std::move(f));
        } else if (tag == "context") {
            std::string key, fname;
            ss >> key >> fname;
            h.contexts.emplace_back();
            cur = &h.contexts.back();
            cur->facet = h.facet_index(fname);
        } else if (tag == "path") {
            std::string step;
            while (ss >> step) {
                if (step == "-") break;
                std::size_t c1 = step.find(':');
                std::size_t c2 = step.find(':', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                    throw DataError("bad path step: " + step);
                PathStep st;
                st.facet = h.facet_index(step.substr(0, c1));
                st.slab = static_cast<int>(
                    stol_strict(std::string_view(step).substr(c1 + 1, c2 - c1 - 1), "slab"));
                std::string splits = step.substr(c2 + 1);
                std::size_t i = 0;
                while (i < splits.size()) {
                    std::size_t j = splits.find(',', i);
                    if (j == std::string::npos) j = splits.size();
                    st.slab_splits.push_back(static_cast<int>(
                        stol_strict(std::string_view(splits).substr(i, j - i), "split")));
                    i = j + 1;
                }
                cur->path.push_back(std::move(st));
            }
        } else if (tag == "counts") {
            std::uint64_t c;
            while (ss >> c) cur->split_message_counts.push_back(c);
        } else if (tag == "slab") {
            Slab sl;
            int s;
            while (ss >> s) sl.splits.push_back(s);
            cur->slabs.push_back(std::move(sl));
        } else if (tag == "end") {
            if (!cur) throw DataError("slab file: end without context");
            int eta = h.facets[cur->facet].splits;
            cur->split_to_slab.assign(eta, -1);
            for (std::size_t k = 0; k < cur->slabs.size(); ++k)
                for (int s : cur->slabs[k].splits)
                    cur->split_to_slab[s] = static_cast<int>(k);
            cur = nullptr;
        } else {
            throw DataError("bad slab file line: " + line);
        }
    }
    return h;
}

}  // namespace authorlink
