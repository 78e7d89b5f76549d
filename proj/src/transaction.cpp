#include "hcc/transaction.h"

namespace hcc {

std::string_view to_string(TxStatus status) {
    switch (status) {
    case TxStatus::Active: return "active";
    case TxStatus::Validating: return "validating";
    case TxStatus::Waiting: return "waiting";
    case TxStatus::Committed: return "committed";
    case TxStatus::Aborted: return "aborted";
    }
    return "?";
}

std::set<TableId> TxState::read_tables() const {
    std::set<TableId> out;
    for (const auto& r : occ_reads) out.insert(r.table);
    for (const auto& s : scans) out.insert(s.table);
    for (const auto& [k, _] : ltx_reads) out.insert(k.first);
    for (const auto& p : predicates) out.insert(p.table);
    return out;
}

std::set<TableId> TxState::write_tables() const {
    std::set<TableId> out;
    for (const auto& [k, _] : writes) out.insert(k.first);
    return out;
}

} // namespace hcc
