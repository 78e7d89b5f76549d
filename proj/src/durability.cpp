#include "hcc/durability.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <unistd.h>
#include <zlib.h>

namespace hcc::durability {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t crc(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

} // namespace

std::string encode(const LogRecord& rec) {
    std::string out;
    out.reserve(kHeaderSize + rec.key.size() + (rec.value ? rec.value->size() : 0) + 4);
    put_u64(out, rec.epoch);
    put_u32(out, rec.table);
    put_u32(out, static_cast<std::uint32_t>(rec.key.size()));
    put_u32(out, rec.value ? static_cast<std::uint32_t>(rec.value->size()) : kDeleteLength);
    out += rec.key;
    if (rec.value) out += *rec.value;
    put_u32(out, crc(out));
    return out;
}

RecoveryResult recover(const std::filesystem::path& log_path) {
    RecoveryResult out;
    std::ifstream in(log_path, std::ios::binary);
    if (!in) return out;
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(buf.data());

    std::vector<LogRecord> pending;
    std::size_t pos = 0;
    std::size_t sealed_end = 0;
    Epoch last_epoch = kNoEpoch;
    while (pos < buf.size()) {
        if (buf.size() - pos < kHeaderSize) break;
        const auto* h = data + pos;
        LogRecord rec;
        rec.epoch = get_le(h, 8);
        rec.table = static_cast<std::uint32_t>(get_le(h + 8, 4));
        const auto key_len = static_cast<std::uint32_t>(get_le(h + 12, 4));
        const auto val_len = static_cast<std::uint32_t>(get_le(h + 16, 4));
        const std::size_t body = std::size_t{key_len} + (val_len == kDeleteLength ? 0 : val_len);
        if (buf.size() - pos - kHeaderSize < body + 4) break;
        const std::string_view covered(buf.data() + pos, kHeaderSize + body);
        const auto stored = static_cast<std::uint32_t>(get_le(data + pos + kHeaderSize + body, 4));
        const std::size_t next = pos + kHeaderSize + body + 4;
        if (crc(covered) != stored) {
            if (next < buf.size()) {
                throw error(ErrorCode::CorruptLog, "bad checksum at offset " + std::to_string(pos));
            }
            break;
        }
        if (rec.epoch < last_epoch) {
            throw error(ErrorCode::CorruptLog, "epoch goes backwards at offset " + std::to_string(pos));
        }
        last_epoch = rec.epoch;
        rec.key.assign(buf.data() + pos + kHeaderSize, key_len);
        if (val_len != kDeleteLength) rec.value = std::string(buf.data() + pos + kHeaderSize + key_len, val_len);
        else rec.value.reset();
        pos = next;

        if (rec.is_marker()) {
            for (auto& r : pending) {
                auto k = std::pair{static_cast<TableId>(r.table), std::move(r.key)};
                if (r.value) out.state[std::move(k)] = std::move(*r.value);
                else out.state.erase(k);
                ++out.records;
            }
            pending.clear();
            out.durable_epoch = rec.epoch;
            sealed_end = pos;
        } else {
            rec.slot_seq = pending.size();
            pending.push_back(std::move(rec));
        }
    }
    out.discarded_bytes = buf.size() - sealed_end;
    return out;
}

Logger::Logger(std::optional<std::filesystem::path> log_path, bool sync)
    : path_(std::move(log_path)), sync_(sync) {
    if (path_) {
        if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
        file_ = std::fopen(path_->c_str(), "wb");
        if (file_ == nullptr) throw error(ErrorCode::IoFailure, "cannot open " + path_->string());
    }
}

Logger::~Logger() {
    if (file_ != nullptr) std::fclose(file_);
}

void Logger::touch(Epoch commit_epoch, TableId table, store::Record* rec) {
    std::lock_guard lock(touch_mutex_);
    touched_[commit_epoch].push_back({table, rec});
}

Epoch Logger::epoch_flush(Epoch e) {
    std::vector<std::pair<TableId, store::Record*>> touched;
    {
        std::lock_guard lock(touch_mutex_);
        auto it = touched_.find(e);
        if (it != touched_.end()) {
            touched = std::move(it->second);
            touched_.erase(it);
        }
    }
    std::sort(touched.begin(), touched.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second->key() < b.second->key();
    });
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    std::vector<LogRecord> records;
    for (const auto& [table, rec] : touched) {
        const auto v = rec->latest();
        if (!v || v->commit_epoch.load() != e || v->persisted.load()) continue;
        v->persisted.store(true);
        records.push_back({e, table, rec->key(), v->value, records.size()});
    }

    if (halted()) return durable_epoch();
    if (file_ != nullptr) {
        std::string bytes;
        for (const auto& r : records) bytes += encode(r);
        bytes += encode(LogRecord::marker(e));
        bool ok = !inject_failure_ && std::fwrite(bytes.data(), 1, bytes.size(), file_) == bytes.size() &&
                  std::fflush(file_) == 0;
        if (ok && sync_) ok = ::fdatasync(::fileno(file_)) == 0;
        if (!ok) {
            halted_.store(true);
            return durable_epoch();
        }
    } else if (inject_failure_) {
        halted_.store(true);
        return durable_epoch();
    }
    records_written_ += records.size();
    durable_epoch_.store(e, std::memory_order_release);
    if (observer_) observer_(e, records);
    return e;
}

SnapshotClass Logger::classify(Epoch e, std::optional<Epoch> min_live_floor) {
    Epoch candidate = e;
    if (min_live_floor && *min_live_floor <= e) candidate = *min_live_floor - 1;
    if (candidate > safe_epoch()) safe_epoch_.store(candidate, std::memory_order_release);
    return safe_epoch() >= e ? SnapshotClass::Safe : SnapshotClass::Unsafe;
}

} // namespace hcc::durability
