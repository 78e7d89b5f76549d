#include "hcc/oracle.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

namespace hcc::oracle {

namespace {

using Key = std::pair<TableId, std::string>;

std::string key_str(const Key& k) { return std::to_string(k.first) + "/x" + to_hex(k.second); }

} // namespace

Summary summarize(const History& h) {
    struct Building {
        CommittedTx tx;
        std::set<Key> written;
        bool finished{false};
    };
    std::unordered_map<TransactionId, Building> live;
    std::vector<TransactionId> commit_order;
    Summary out;

    for (const auto& ev : h) {
        auto it = live.find(ev.tx);
        if (ev.kind == EventKind::Begin) {
            if (it != live.end()) throw error(ErrorCode::MalformedHistory, "duplicate begin of " + ev.tx.str());
            live[ev.tx].tx.id = ev.tx;
            continue;
        }
        if (it == live.end()) throw error(ErrorCode::MalformedHistory, ev.tx.str() + " has no begin");
        auto& b = it->second;
        if (b.finished) throw error(ErrorCode::MalformedHistory, ev.tx.str() + " has events after its end");
        switch (ev.kind) {
        case EventKind::Read: {
            if (ev.version_writer == ev.tx) break;
            b.tx.reads.push_back({{*ev.table, *ev.key}, ev.version_writer});
            break;
        }
        case EventKind::Write:
            if (b.written.insert({*ev.table, *ev.key}).second) b.tx.writes.push_back({*ev.table, *ev.key});
            break;
        case EventKind::Commit:
            b.finished = true;
            b.tx.slot = *ev.slot;
            out.outcome[ev.tx] = true;
            commit_order.push_back(ev.tx);
            break;
        case EventKind::Abort:
            b.finished = true;
            out.outcome[ev.tx] = false;
            break;
        case EventKind::Begin: break;
        }
    }
    for (const auto& [id, b] : live) {
        if (!b.finished) throw error(ErrorCode::MalformedHistory, id.str() + " never finished");
    }
    for (auto id : commit_order) out.committed.push_back(std::move(live[id].tx));
    return out;
}

Verdict check_witness(const History& h) {
    const auto s = summarize(h);

    std::unordered_map<TransactionId, SerializationSlot> slot_of;
    std::map<Key, std::vector<std::pair<SerializationSlot, TransactionId>>> writers;
    for (const auto& tx : s.committed) {
        slot_of[tx.id] = tx.slot;
        for (const auto& k : tx.writes) writers[k].push_back({tx.slot, tx.id});
    }
    for (auto& [k, w] : writers) {
        std::sort(w.begin(), w.end());
        for (std::size_t i = 1; i < w.size(); ++i) {
            if (w[i - 1].first == w[i].first) {
                return Verdict::violation("writers " + w[i - 1].second.str() + " and " + w[i].second.str() +
                                          " share slot " + w[i].first.str() + " on " + key_str(k));
            }
        }
    }

    for (const auto& tx : s.committed) {
        for (const auto& [k, w] : tx.reads) {
            const auto wit = writers.find(k);
            // latest committed writer of k (other than the reader) below the reader's slot
            TransactionId expected;
            if (wit != writers.end()) {
                for (const auto& [ws, wid] : wit->second) {
                    if (!(ws < tx.slot)) break;
                    if (wid != tx.id) expected = wid;
                }
            }
            if (!w.nil()) {
                auto ow = s.outcome.find(w);
                if (ow == s.outcome.end() || !ow->second) {
                    return Verdict::violation(tx.id.str() + " read " + key_str(k) + " from uncommitted " + w.str());
                }
                if (!(slot_of[w] < tx.slot)) {
                    return Verdict::violation(tx.id.str() + "@" + tx.slot.str() + " read " + key_str(k) +
                                              " from later writer " + w.str() + "@" + slot_of[w].str());
                }
            }
            if (expected != w) {
                return Verdict::violation(tx.id.str() + "@" + tx.slot.str() + " read " + key_str(k) + " from " +
                                          w.str() + " but " + expected.str() + " is the latest earlier writer");
            }
        }
    }
    return Verdict::ok();
}

Verdict check_mvsr_bruteforce(const History& h) {
    const auto s = summarize(h);
    const auto n = s.committed.size();
    if (n > kMaxBruteForceTxs) {
        throw error(ErrorCode::TooLarge, std::to_string(n) + " committed transactions");
    }
    for (const auto& tx : s.committed) {
        for (const auto& [k, w] : tx.reads) {
            if (!w.nil() && !s.outcome.contains(w)) return Verdict::violation("read from unknown " + w.str());
            if (!w.nil() && !s.outcome.at(w)) return Verdict::violation("read from aborted " + w.str());
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
        std::map<Key, TransactionId> last;
        bool ok = true;
        for (auto idx : order) {
            const auto& tx = s.committed[idx];
            for (const auto& [k, w] : tx.reads) {
                auto it = last.find(k);
                const TransactionId seen = it == last.end() ? TransactionId{} : it->second;
                if (seen != w) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
            for (const auto& k : tx.writes) last[k] = tx.id;
        }
        if (ok) return Verdict::ok();
    } while (std::next_permutation(order.begin(), order.end()));
    return Verdict::violation("no serial order reproduces the reads-from relation");
}

bool check_csr(const History& h) {
    const auto s = summarize(h);
    std::unordered_map<TransactionId, std::size_t> index;
    for (std::size_t i = 0; i < s.committed.size(); ++i) index[s.committed[i].id] = i;

    struct Op {
        std::size_t tx;
        bool write;
    };
    std::map<Key, std::vector<Op>> ops;
    for (const auto& ev : h) {
        if (ev.kind != EventKind::Read && ev.kind != EventKind::Write) continue;
        auto it = index.find(ev.tx);
        if (it == index.end()) continue;
        ops[{*ev.table, *ev.key}].push_back({it->second, ev.kind == EventKind::Write});
    }

    std::vector<std::set<std::size_t>> edges(s.committed.size());
    for (const auto& [k, list] : ops) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                if (list[i].tx != list[j].tx && (list[i].write || list[j].write)) {
                    edges[list[i].tx].insert(list[j].tx);
                }
            }
        }
    }

    // iterative three-colour DFS
    std::vector<int> colour(edges.size(), 0);
    for (std::size_t root = 0; root < edges.size(); ++root) {
        if (colour[root] != 0) continue;
        std::vector<std::pair<std::size_t, std::set<std::size_t>::const_iterator>> stack;
        stack.push_back({root, edges[root].begin()});
        colour[root] = 1;
        while (!stack.empty()) {
            auto& [node, it] = stack.back();
            if (it == edges[node].end()) {
                colour[node] = 2;
                stack.pop_back();
                continue;
            }
            const auto next = *it++;
            if (colour[next] == 1) return false;
            if (colour[next] == 0) {
                colour[next] = 1;
                stack.push_back({next, edges[next].begin()});
            }
        }
    }
    return true;
}

} // namespace hcc::oracle
