#include "hcc/engine.h"

#include <map>

namespace hcc {

using oracle::HistoryEvent;

Engine::Engine(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      store_(cfg_.wp_capacity),
      logger_(cfg_.log_path, cfg_.sync_log),
      occ_(store_, epochs_, logger_),
      ltx_(store_, epochs_, logger_,
           ltx::Config{cfg_.order_forwarding, cfg_.aggressive_forwarding, cfg_.max_wait_epochs}) {
    epochs_.set_end_of_epoch_hook([this](Epoch e) { on_epoch_end(e); });
    if (cfg_.epoch_period.count() > 0) epochs_.start_ticker(cfg_.epoch_period);
}

Engine::~Engine() { epochs_.stop_ticker(); }

void Engine::shutdown() {
    epochs_.stop_ticker();
    epochs_.advance();
}

TableId Engine::create_table(std::string name) { return store_.create_table(std::move(name)); }

TransactionHandle Engine::begin(const TxOptions& opts) {
    std::shared_ptr<TxState> tx;
    switch (opts.mode) {
    case TxMode::Occ:
        tx = std::make_shared<TxState>();
        tx->mode = TxMode::Occ;
        tx->id = TransactionId::counter(TxMode::Occ, occ_ids_.fetch_add(1) + 1);
        break;
    case TxMode::Ltx:
        tx = ltx_.begin(opts.wp_tables, opts.read_area);
        break;
    case TxMode::ReadOnly: {
        tx = std::make_shared<TxState>();
        tx->mode = TxMode::ReadOnly;
        tx->id = TransactionId::counter(TxMode::ReadOnly, ro_ids_.fetch_add(1) + 1);
        std::lock_guard lock(ro_mutex_);
        tx->valid_epoch = logger_.safe_epoch() + 1;
        tx->snapshot = SerializationSlot::epoch_start(tx->valid_epoch);
        ro_snapshots_.insert(tx->valid_epoch);
        break;
    }
    }
    emit(HistoryEvent::begin(tx->id));
    return TransactionHandle{std::move(tx)};
}

TxState& Engine::active(TransactionHandle& h) const {
    if (!h.valid()) throw error(ErrorCode::TxInactive, "empty handle");
    auto& tx = *h.state_;
    if (tx.status != TxStatus::Active) throw error(ErrorCode::TxInactive, tx.id.str() + " is not active");
    return tx;
}

ReadResult Engine::read_versioned(TransactionHandle& h, TableId table, std::string_view key) {
    auto& tx = active(h);
    ReadResult r;
    switch (tx.mode) {
    case TxMode::Occ: r = occ_.read(tx, table, key); break;
    case TxMode::Ltx: r = ltx_.read(tx, table, key); break;
    case TxMode::ReadOnly: {
        const auto* rec = store_.table(table).find(key);
        const auto v = rec ? rec->visible(tx.snapshot) : nullptr;
        if (v) r = {v->value, v->writer};
        break;
    }
    }
    emit(HistoryEvent::read(tx.id, table, std::string(key), r.writer));
    return r;
}

std::optional<std::string> Engine::read(TransactionHandle& h, TableId table, std::string_view key) {
    return read_versioned(h, table, key).value;
}

std::vector<std::pair<std::string, std::string>> Engine::scan(TransactionHandle& h, TableId table,
                                                              const KeyRange& range) {
    auto& tx = active(h);
    std::vector<ScanRow> rows;
    switch (tx.mode) {
    case TxMode::Occ: rows = occ_.scan(tx, table, range); break;
    case TxMode::Ltx: rows = ltx_.scan(tx, table, range); break;
    case TxMode::ReadOnly:
        for (const auto& e : store_.scan(table, range, tx.snapshot).entries) {
            if (e.version && !e.version->deleted()) rows.push_back({e.record->key(), *e.version->value, e.version->writer});
        }
        break;
    }
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(rows.size());
    for (auto& row : rows) {
        emit(HistoryEvent::read(tx.id, table, row.key, row.writer));
        out.emplace_back(std::move(row.key), std::move(row.value));
    }
    return out;
}

void Engine::write(TransactionHandle& h, TableId table, std::string key, std::string value) {
    auto& tx = active(h);
    if (tx.mode == TxMode::ReadOnly) throw error(ErrorCode::ReadOnlyViolation, tx.id.str() + " is read-only");
    std::string k = key;
    if (tx.mode == TxMode::Occ) {
        occ_.write(tx, table, std::move(key), std::move(value));
    } else {
        try {
            ltx_.write(tx, table, std::move(key), std::move(value));
        } catch (const error& e) {
            if (e.code() == ErrorCode::WpMismatch) emit(HistoryEvent::abort(tx.id));
            throw;
        }
    }
    emit(HistoryEvent::write(tx.id, table, std::move(k)));
}

void Engine::erase(TransactionHandle& h, TableId table, std::string key) {
    auto& tx = active(h);
    if (tx.mode == TxMode::ReadOnly) throw error(ErrorCode::ReadOnlyViolation, tx.id.str() + " is read-only");
    std::string k = key;
    if (tx.mode == TxMode::Occ) {
        occ_.write(tx, table, std::move(key), std::nullopt);
    } else {
        try {
            ltx_.write(tx, table, std::move(key), std::nullopt);
        } catch (const error& e) {
            if (e.code() == ErrorCode::WpMismatch) emit(HistoryEvent::abort(tx.id));
            throw;
        }
    }
    emit(HistoryEvent::write(tx.id, table, std::move(k)));
}

void Engine::emit_outcome(const TxState& tx, const CommitResult& r) {
    if (r.is_committed()) emit(HistoryEvent::commit(tx.id, r.slot));
    else if (r.is_aborted()) emit(HistoryEvent::abort(tx.id));
}

void Engine::end_read_only(const TxState& tx) {
    std::lock_guard lock(ro_mutex_);
    if (auto it = ro_snapshots_.find(tx.valid_epoch); it != ro_snapshots_.end()) ro_snapshots_.erase(it);
}

CommitResult Engine::commit(TransactionHandle& h) {
    auto& tx = active(h);
    CommitResult r;
    switch (tx.mode) {
    case TxMode::Occ: r = occ_.commit(tx); break;
    case TxMode::Ltx: r = ltx_.precommit(tx); break;
    case TxMode::ReadOnly:
        r = CommitResult::committed(tx.snapshot);
        tx.status = TxStatus::Committed;
        tx.result = r;
        end_read_only(tx);
        break;
    }
    emit_outcome(tx, r);
    return r;
}

CommitResult Engine::poll(const TransactionHandle& h) const {
    if (!h.valid()) throw error(ErrorCode::TxInactive, "empty handle");
    if (h.mode() == TxMode::Ltx) return ltx_.poll(*h.state_);
    return h.state_->result;
}

CommitResult Engine::wait(const TransactionHandle& h) const {
    for (auto r = poll(h);; r = poll(h)) {
        if (!r.is_waiting()) return r;
        epochs_.wait_until(epochs_.current() + 1);
    }
}

TxStatus Engine::status(const TransactionHandle& h) const {
    if (!h.valid()) throw error(ErrorCode::TxInactive, "empty handle");
    if (h.mode() == TxMode::Ltx) return ltx_.status(*h.state_);
    return h.state_->status;
}

void Engine::abort(TransactionHandle& h) {
    if (!h.valid()) return;
    auto& tx = *h.state_;
    if (tx.mode == TxMode::Ltx) {
        if (ltx_.status(tx) != TxStatus::Active) {
            ltx_.request_abort(tx);
            return;
        }
        ltx_.request_abort(tx);
        emit(HistoryEvent::abort(tx.id));
        return;
    }
    if (tx.status != TxStatus::Active) return;
    tx.status = TxStatus::Aborted;
    tx.result = CommitResult::aborted(AbortReason::UserAbort);
    tx.writes.clear();
    if (tx.mode == TxMode::ReadOnly) end_read_only(tx);
    emit(HistoryEvent::abort(tx.id));
}

void Engine::on_epoch_end(Epoch e) {
    for (const auto& [tx, r] : ltx_.resolve_waiters(e)) emit_outcome(*tx, r);
    ltx_.apply_wp_removals();
    logger_.epoch_flush(e);
    logger_.classify(e, ltx_.min_live_floor());
    const Epoch safe = logger_.safe_epoch();
    ltx_.prune(safe);
    Epoch horizon = safe + 1;
    {
        std::lock_guard lock(ro_mutex_);
        if (!ro_snapshots_.empty()) horizon = std::min(horizon, *ro_snapshots_.begin());
    }
    store_.collect_garbage(SerializationSlot::epoch_start(horizon));
    if (observer_) observer_(e);
}

EngineStats Engine::stats() const {
    const auto& s = ltx_.stats();
    return {s.waits.load(), s.forwarded.load(), s.priority_violations.load(), s.wait_cycles.load(),
            logger_.records_written()};
}

} // namespace hcc
