#include "dicelab/device.hpp"

#include <bit>
#include <cstdio>
#include <stdexcept>

#include "dicelab/crypto.hpp"
#include "dicelab/dice.hpp"

namespace dicelab::sim {

namespace mm = dicelab::mm;

const char* trap_name(TrapKind kind) {
    switch (kind) {
        case TrapKind::BusFault: return "BusFault";
        case TrapKind::WriteFault: return "WriteFault";
        case TrapKind::AccessFault: return "AccessFault";
        case TrapKind::UndefFault: return "UndefFault";
    }
    return "?";
}

uint32_t RegisterFile::get(uint8_t idx) const {
    if (idx < 13) return r[idx];
    if (idx == isa::kRegSp) return sp;
    if (idx == isa::kRegLr) return lr;
    return pc;
}

void RegisterFile::set(uint8_t idx, uint32_t value) {
    if (idx < 13) r[idx] = value;
    else if (idx == isa::kRegSp) sp = value;
    else if (idx == isa::kRegLr) lr = value;
    else pc = value;
}

namespace {

bool in_flash(uint32_t addr) { return addr < mm::kFlashSize; }
bool in_ram(uint32_t addr) { return addr - mm::kRamBase < mm::kRamSize; }
bool in_periph(uint32_t addr) { return addr >= mm::kPeriphBase && addr < mm::kPeriphEnd; }

[[nodiscard]] StepOutcome raise(DeviceState& s, TrapKind kind, uint32_t addr, const char* what) {
    s.trap = Trap{kind, s.regs.pc, addr, what};
    s.run = RunState::Trapped;
    return StepOutcome::Trapped;
}

bool acl_blocks_read(const DeviceState& s, uint32_t addr) {
    for (const auto& region : s.acl)
        if (region.covers(addr) && region.perm == AclPerm::NoReadNoWrite) return true;
    return false;
}

bool acl_blocks_write(const DeviceState& s, uint32_t addr) {
    for (const auto& region : s.acl)
        if (region.covers(addr) && region.perm != AclPerm::None) return true;
    return false;
}

uint32_t rng_gap(DeviceState& s) {
    std::uniform_int_distribution<uint32_t> dist(s.timer.gap_lo, s.timer.gap_hi);
    return dist(s.rng);
}

uint32_t raw_word(const Bytes& mem, uint32_t off) {
    return static_cast<uint32_t>(mem[off]) | static_cast<uint32_t>(mem[off + 1]) << 8 |
           static_cast<uint32_t>(mem[off + 2]) << 16 | static_cast<uint32_t>(mem[off + 3]) << 24;
}

void raw_store(Bytes& mem, uint32_t off, uint32_t value) {
    mem[off] = static_cast<uint8_t>(value);
    mem[off + 1] = static_cast<uint8_t>(value >> 8);
    mem[off + 2] = static_cast<uint8_t>(value >> 16);
    mem[off + 3] = static_cast<uint8_t>(value >> 24);
}

struct MemFault {
    TrapKind kind;
    uint32_t addr;
    const char* what;
};

// Data/fetch read of one aligned word under ACL rules.
std::optional<MemFault> load_word(const DeviceState& s, uint32_t addr, bool fetch, uint32_t& out) {
    if (addr % 4) return MemFault{TrapKind::BusFault, addr, "unaligned access"};
    if (in_flash(addr)) {
        if (acl_blocks_read(s, addr))
            return MemFault{TrapKind::AccessFault, addr, "ACL read violation"};
        out = raw_word(s.flash, addr);
        return std::nullopt;
    }
    if (in_ram(addr)) {
        out = raw_word(s.ram, addr - mm::kRamBase);
        return std::nullopt;
    }
    if (!fetch && in_periph(addr)) {
        switch (addr) {
            case mm::kNvmcConfig: out = static_cast<uint32_t>(s.nvmc.config); return std::nullopt;
            case mm::kNvmcErasePage: out = s.nvmc.erasepage; return std::nullopt;
            case mm::kTimerCtrl: out = s.timer.armed ? 1 : 0; return std::nullopt;
            case mm::kAwdtPeriod: out = static_cast<uint32_t>(s.awdt.period); return std::nullopt;
            case mm::kAwdtToken: out = 0; return std::nullopt;
            case mm::kAwdtKeyAddr: out = s.awdt.key_addr; return std::nullopt;
            case mm::kAircr: out = 0; return std::nullopt;
            default: break;
        }
        if (addr >= mm::kAclBase &&
            addr < mm::kAclBase + mm::kAclRegionCount * mm::kAclRegionStride) {
            uint32_t idx = (addr - mm::kAclBase) / mm::kAclRegionStride;
            switch ((addr - mm::kAclBase) % mm::kAclRegionStride) {
                case 0: out = s.acl[idx].start; return std::nullopt;
                case 4: out = s.acl[idx].size; return std::nullopt;
                case 8: out = static_cast<uint32_t>(s.acl[idx].perm); return std::nullopt;
                default: break;
            }
        }
        return MemFault{TrapKind::BusFault, addr, "undefined peripheral register"};
    }
    return MemFault{TrapKind::BusFault, addr, fetch ? "fetch from unmapped address"
                                                    : "load from unmapped address"};
}

// Byte-range read through the same checks; used by the intrinsics.
std::optional<MemFault> read_range(const DeviceState& s, uint32_t addr, uint32_t len, Bytes& out) {
    out.clear();
    out.reserve(len);
    for (uint32_t i = 0; i < len; ++i) {
        uint32_t a = addr + i;
        if (in_flash(a)) {
            if (acl_blocks_read(s, a))
                return MemFault{TrapKind::AccessFault, a, "ACL read violation"};
            out.push_back(s.flash[a]);
        } else if (in_ram(a)) {
            out.push_back(s.ram[a - mm::kRamBase]);
        } else {
            return MemFault{TrapKind::BusFault, a, "load from unmapped address"};
        }
    }
    return std::nullopt;
}

std::optional<MemFault> write_ram_range(DeviceState& s, uint32_t addr, ByteView data) {
    for (size_t i = 0; i < data.size(); ++i) {
        uint32_t a = addr + static_cast<uint32_t>(i);
        if (!in_ram(a)) return MemFault{TrapKind::BusFault, a, "intrinsic write outside RAM"};
        s.ram[a - mm::kRamBase] = data[i];
    }
    return std::nullopt;
}

void awdt_accept_token(DeviceState& s, uint32_t token_addr) {
    // The watchdog peripheral checks the token signature itself; a bad or
    // replayed token simply fails to extend the deadline.
    if (!s.awdt.armed || !s.awdt.key_set) return;
    if (!in_ram(token_addr) || !in_ram(token_addr + 71)) return;
    Bytes token = Bytes(s.ram.begin() + (token_addr - mm::kRamBase),
                        s.ram.begin() + (token_addr - mm::kRamBase) + 72);
    if (get_u32le(token, 0) != mm::kAwdtMagic) return;
    uint32_t counter = get_u32le(token, 4);
    if (counter <= s.awdt.last_counter) return;
    if (!in_flash(s.awdt.key_addr) || !in_flash(s.awdt.key_addr + 31)) return;
    crypto::PublicKey key{};
    std::memcpy(key.data(), s.flash.data() + s.awdt.key_addr, 32);
    crypto::Signature sig = to_array<64>(token, 8);
    if (!crypto::ed25519_verify(key, ByteView{token.data(), 8}, sig)) return;
    s.awdt.last_counter = counter;
    s.awdt.deadline = s.instr_count + s.awdt.period;
}

struct StoreEffect {
    std::optional<MemFault> fault;
    bool reset_requested = false;
};

StoreEffect store_word(DeviceState& s, uint32_t addr, uint32_t value) {
    StoreEffect eff;
    if (addr % 4) {
        eff.fault = MemFault{TrapKind::BusFault, addr, "unaligned store"};
        return eff;
    }
    if (in_ram(addr)) {
        raw_store(s.ram, addr - mm::kRamBase, value);
        return eff;
    }
    if (in_flash(addr)) {
        if (acl_blocks_write(s, addr)) {
            eff.fault = MemFault{TrapKind::AccessFault, addr, "ACL write violation"};
            return eff;
        }
        if (s.nvmc.config != NvmcConfig::WriteEnable) {
            eff.fault = MemFault{TrapKind::WriteFault, addr, "flash write without write-enable"};
            return eff;
        }
        for (int i = 0; i < 4; ++i) {
            if (s.flash[addr + i] != 0xFF) {
                eff.fault = MemFault{TrapKind::WriteFault, addr, "flash write to non-erased word"};
                return eff;
            }
        }
        raw_store(s.flash, addr, value);
        return eff;
    }
    if (in_periph(addr)) {
        switch (addr) {
            case mm::kNvmcConfig:
                if (value > 2) {
                    eff.fault = MemFault{TrapKind::WriteFault, addr, "invalid NVMC config"};
                    return eff;
                }
                s.nvmc.config = static_cast<NvmcConfig>(value);
                return eff;
            case mm::kNvmcErasePage: {
                if (s.nvmc.config != NvmcConfig::EraseEnable) {
                    eff.fault = MemFault{TrapKind::WriteFault, addr, "erase without erase-enable"};
                    return eff;
                }
                if (value % mm::kPageSize || !in_flash(value)) {
                    eff.fault = MemFault{TrapKind::WriteFault, addr, "erasepage not a page start"};
                    return eff;
                }
                for (uint32_t a = value; a < value + mm::kPageSize; ++a) {
                    if (acl_blocks_write(s, a)) {
                        eff.fault = MemFault{TrapKind::AccessFault, a, "ACL blocks page erase"};
                        return eff;
                    }
                }
                std::fill(s.flash.begin() + value, s.flash.begin() + value + mm::kPageSize, 0xFF);
                s.nvmc.erasepage = value;
                return eff;
            }
            case mm::kTimerCtrl:
                s.timer.armed = (value != 0) && s.timer.enabled;
                if (s.timer.armed) s.timer.next_fire = s.instr_count + rng_gap(s);
                return eff;
            case mm::kAwdtPeriod:
                if (s.awdt.armed) {
                    eff.fault = MemFault{TrapKind::AccessFault, addr, "AWDT already armed"};
                    return eff;
                }
                if (value != 0) {
                    s.awdt.armed = true;
                    s.awdt.period = value;
                    s.awdt.deadline = s.instr_count + value;
                }
                return eff;
            case mm::kAwdtToken:
                awdt_accept_token(s, value);
                return eff;
            case mm::kAwdtKeyAddr:
                if (s.awdt.key_set) {
                    eff.fault = MemFault{TrapKind::AccessFault, addr, "AWDT key already set"};
                    return eff;
                }
                s.awdt.key_addr = value;
                s.awdt.key_set = true;
                return eff;
            case mm::kAircr:
                if (value == mm::kAircrResetValue) eff.reset_requested = true;
                return eff;
            default: break;
        }
        if (addr >= mm::kAclBase &&
            addr < mm::kAclBase + mm::kAclRegionCount * mm::kAclRegionStride) {
            uint32_t idx = (addr - mm::kAclBase) / mm::kAclRegionStride;
            AclRegion& region = s.acl[idx];
            uint32_t field = (addr - mm::kAclBase) % mm::kAclRegionStride;
            if (field == 12) {
                eff.fault = MemFault{TrapKind::BusFault, addr, "reserved ACL register"};
                return eff;
            }
            if (region.locked) {
                eff.fault = MemFault{TrapKind::AccessFault, addr, "ACL region locked"};
                return eff;
            }
            if (field == 0) region.start = value;
            else if (field == 4) region.size = value;
            else {
                if (value != 1 && value != 2) {
                    eff.fault = MemFault{TrapKind::WriteFault, addr, "invalid ACL permission"};
                    return eff;
                }
                region.perm = static_cast<AclPerm>(value);
                region.locked = true;
            }
            return eff;
        }
        eff.fault = MemFault{TrapKind::BusFault, addr, "undefined peripheral register"};
        return eff;
    }
    eff.fault = MemFault{TrapKind::BusFault, addr, "store to unmapped address"};
    return eff;
}

// --- intrinsics -----------------------------------------------------------

std::optional<MemFault> read_param_word(const DeviceState& s, uint32_t block, uint32_t off,
                                        uint32_t& out) {
    Bytes tmp;
    if (auto f = read_range(s, block + off, 4, tmp)) return f;
    out = get_u32le(tmp, 0);
    return std::nullopt;
}

struct DeriveParams {
    uint32_t uds_addr, riot_base, riot_len, app_base, app_len, lib_base, lib_len;
    uint32_t version, cdi_ram, cred_ram, boot_input_mode, nonce_slot, counter_base, counter_words;
};

std::optional<MemFault> read_derive_params(const DeviceState& s, uint32_t block, DeriveParams& p) {
    struct Field { uint32_t off; uint32_t* dst; };
    Field fields[] = {
        {mm::pb::kUdsAddr, &p.uds_addr},       {mm::pb::kRiotBase, &p.riot_base},
        {mm::pb::kRiotLen, &p.riot_len},       {mm::pb::kAppBase, &p.app_base},
        {mm::pb::kAppLen, &p.app_len},         {mm::pb::kLibBase, &p.lib_base},
        {mm::pb::kLibLen, &p.lib_len},         {mm::pb::kVersion, &p.version},
        {mm::pb::kCdiRam, &p.cdi_ram},         {mm::pb::kCredRam, &p.cred_ram},
        {mm::pb::kBootInputMode, &p.boot_input_mode}, {mm::pb::kNonceSlot, &p.nonce_slot},
        {mm::pb::kCounterBase, &p.counter_base},      {mm::pb::kCounterWords, &p.counter_words},
    };
    for (auto& f : fields)
        if (auto fault = read_param_word(s, block, f.off, *f.dst)) return fault;
    return std::nullopt;
}

uint64_t counter_value(const DeviceState& s, uint32_t base, uint32_t words) {
    uint64_t used = 0;
    for (uint32_t i = 0; i < words; ++i) {
        uint32_t a = base + 4 * i;
        if (!in_flash(a)) break;
        if (raw_word(s.flash, a) != 0xFFFFFFFFu) used++;
    }
    return used;
}

StepOutcome exec_dicecdi(DeviceState& s, uint32_t block) {
    DeriveParams p{};
    if (auto f = read_derive_params(s, block, p)) return raise(s, f->kind, f->addr, f->what);
    Bytes uds_bytes, riot_bytes;
    if (auto f = read_range(s, p.uds_addr, 32, uds_bytes)) return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_range(s, p.riot_base, p.riot_len, riot_bytes))
        return raise(s, f->kind, f->addr, f->what);
    dice::Uds uds{to_array<32>(uds_bytes)};
    auto riot_meas = dice::measure(riot_bytes);
    auto cdi = dice::derive_layer_secret(uds, riot_meas);
    if (auto f = write_ram_range(s, p.cdi_ram, cdi.bytes)) return raise(s, f->kind, f->addr, f->what);
    return StepOutcome::Ok;
}

StepOutcome exec_diceid(DeviceState& s, uint32_t block) {
    DeriveParams p{};
    if (auto f = read_derive_params(s, block, p)) return raise(s, f->kind, f->addr, f->what);
    Bytes cdi_bytes;
    if (auto f = read_range(s, p.cdi_ram, 32, cdi_bytes)) return raise(s, f->kind, f->addr, f->what);

    Bytes app_bytes, lib_bytes;
    if (auto f = read_range(s, p.app_base, p.app_len, app_bytes))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_range(s, p.lib_base, p.lib_len, lib_bytes))
        return raise(s, f->kind, f->addr, f->what);
    Bytes measured = app_bytes;
    measured.insert(measured.end(), lib_bytes.begin(), lib_bytes.end());
    put_u32le(measured, p.version);
    auto app_meas = dice::measure(measured);

    std::optional<dice::BootInput> input;
    if (p.boot_input_mode != 0) {
        dice::BootInput bi{};
        bool use_counter = p.boot_input_mode == 2;
        if (p.boot_input_mode == 1) {
            Bytes nonce;
            if (auto f = read_range(s, p.nonce_slot, 32, nonce))
                return raise(s, f->kind, f->addr, f->what);
            bool erased = true;
            for (uint8_t b : nonce) erased &= (b == 0xFF);
            if (erased) use_counter = true;  // nonce never delivered: counter fallback
            else std::memcpy(bi.data(), nonce.data(), 32);
        }
        if (use_counter) {
            uint64_t c = counter_value(s, p.counter_base, p.counter_words);
            for (int i = 0; i < 8; ++i) bi[i] = static_cast<uint8_t>(c >> (8 * i));
        }
        input = bi;
    }

    dice::LayerSecret cdi{to_array<32>(cdi_bytes)};
    auto device_id = dice::derive_device_id(cdi);
    auto alias = dice::derive_alias_key(cdi, app_meas, input);
    auto cert = dice::issue_alias_certificate(device_id, alias.public_key, app_meas, input);

    Bytes creds(alias.secret.begin(), alias.secret.end());
    Bytes cert_bytes = cert.encode();
    creds.insert(creds.end(), cert_bytes.begin(), cert_bytes.end());
    creds.resize(mm::kCredLen, 0x00);
    if (auto f = write_ram_range(s, p.cred_ram, creds)) return raise(s, f->kind, f->addr, f->what);

    // The layer secret must not outlive key derivation.
    Bytes zeros(32, 0x00);
    if (auto f = write_ram_range(s, p.cdi_ram, zeros)) return raise(s, f->kind, f->addr, f->what);
    return StepOutcome::Ok;
}

StepOutcome exec_sbverify(DeviceState& s, uint32_t block) {
    uint32_t key_addr, sig_addr, extra, count;
    if (auto f = read_param_word(s, block, mm::sb::kKeyAddr, key_addr))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sb::kSigAddr, sig_addr))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sb::kExtra, extra))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sb::kRangeCount, count))
        return raise(s, f->kind, f->addr, f->what);
    if (count > 8) return raise(s, TrapKind::BusFault, block, "sbveri range count");

    Bytes msg;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t base, len;
        if (auto f = read_param_word(s, block, mm::sb::kRanges + 8 * i, base))
            return raise(s, f->kind, f->addr, f->what);
        if (auto f = read_param_word(s, block, mm::sb::kRanges + 8 * i + 4, len))
            return raise(s, f->kind, f->addr, f->what);
        Bytes part;
        if (auto f = read_range(s, base, len, part)) return raise(s, f->kind, f->addr, f->what);
        msg.insert(msg.end(), part.begin(), part.end());
    }
    put_u32le(msg, extra);
    auto digest = crypto::sha256(msg);

    Bytes key_bytes, sig_bytes;
    if (auto f = read_range(s, key_addr, 32, key_bytes)) return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_range(s, sig_addr, 64, sig_bytes)) return raise(s, f->kind, f->addr, f->what);
    bool ok = crypto::ed25519_verify(to_array<32>(key_bytes), digest, to_array<64>(sig_bytes));
    s.regs.r[0] = ok ? 0 : 1;
    return StepOutcome::Ok;
}

StepOutcome exec_sign(DeviceState& s, uint32_t block) {
    uint32_t key_addr, msg_addr, msg_len, out_addr;
    if (auto f = read_param_word(s, block, mm::sg::kKeyAddr, key_addr))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sg::kMsgAddr, msg_addr))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sg::kMsgLen, msg_len))
        return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_param_word(s, block, mm::sg::kOutAddr, out_addr))
        return raise(s, f->kind, f->addr, f->what);
    if (msg_len > 4096) return raise(s, TrapKind::BusFault, block, "sign message too long");
    Bytes key_bytes, msg;
    if (auto f = read_range(s, key_addr, 64, key_bytes)) return raise(s, f->kind, f->addr, f->what);
    if (auto f = read_range(s, msg_addr, msg_len, msg)) return raise(s, f->kind, f->addr, f->what);
    auto sig = crypto::ed25519_sign(to_array<64>(key_bytes), msg);
    if (auto f = write_ram_range(s, out_addr, sig)) return raise(s, f->kind, f->addr, f->what);
    return StepOutcome::Ok;
}

void do_reset(DeviceState& s) {
    s.regs = RegisterFile{};
    s.regs.sp = mm::kStackTop;
    s.regs.pc = 0;
    s.nvmc = NvmcState{};
    for (auto& region : s.acl) region = AclRegion{};
    s.awdt = AwdtState{};
    s.timer.armed = false;
    s.timer.next_fire = 0;
    std::fill(s.ram.begin(), s.ram.end(), 0x00);
    s.run = RunState::Running;
    s.trap.reset();
    s.reset_count++;
}

}  // namespace

DeviceState make_device(const std::vector<ImageSection>& sections,
                        std::span<const uint8_t, 32> uds, const SimConfig& config) {
    DeviceState s;
    s.flash.assign(mm::kFlashSize, 0xFF);
    s.ram.assign(mm::kRamSize, 0x00);
    for (const auto& sec : sections) {
        if (!in_flash(sec.base) || sec.base + sec.bytes.size() > mm::kFlashSize)
            throw std::invalid_argument("section '" + sec.name + "' outside flash");
        std::copy(sec.bytes.begin(), sec.bytes.end(), s.flash.begin() + sec.base);
    }
    std::copy(uds.begin(), uds.end(), s.flash.begin() + mm::kUdsPage);
    s.rng.seed(config.seed);
    s.timer.enabled = config.timer_enabled;
    s.timer.gap_lo = config.timer_gap_lo;
    s.timer.gap_hi = config.timer_gap_hi;
    do_reset(s);
    s.reset_count = 0;
    return s;
}

void power_on_reset(DeviceState& state) { do_reset(state); }

StepOutcome step(DeviceState& s) {
    if (s.run != RunState::Running) {
        return s.run == RunState::Halted ? StepOutcome::Halted : StepOutcome::Trapped;
    }

    if (s.awdt.armed && s.instr_count >= s.awdt.deadline) {
        do_reset(s);
        s.watchdog_resets++;
        return StepOutcome::Reset;
    }

    if (s.timer.armed && s.regs.primask == 0 && s.instr_count >= s.timer.next_fire) {
        for (int reg : {0, 1, 2, 3, 12}) s.regs.r[reg] = static_cast<uint32_t>(s.rng());
        for (uint32_t i = 1; i <= 32; ++i) {
            uint32_t a = s.regs.sp - i;
            if (in_ram(a)) s.ram[a - mm::kRamBase] = static_cast<uint8_t>(s.rng());
        }
        s.timer.next_fire = s.instr_count + rng_gap(s);
        s.timer.fires++;
    }

    uint32_t fetch_pc = s.regs.pc;
    if (in_periph(fetch_pc))
        return raise(s, TrapKind::BusFault, fetch_pc, "fetch from peripheral window");
    uint32_t word = 0;
    if (auto f = load_word(s, fetch_pc, /*fetch=*/true, word))
        return raise(s, f->kind, f->addr, f->what);

    auto decoded = isa::decode(word);
    if (!decoded) return raise(s, TrapKind::UndefFault, fetch_pc, "undefined instruction");
    const isa::Instr& in = *decoded;

    if (s.trace) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%08x  %-30s sp=%08x\n", fetch_pc,
                      isa::disassemble(in).c_str(), s.regs.sp);
        *s.trace << buf;
    }

    uint32_t next_pc = fetch_pc + 4;
    StepOutcome outcome = StepOutcome::Ok;
    bool reset_requested = false;

    auto do_store = [&](uint32_t addr, uint32_t value) -> bool {
        StoreEffect eff = store_word(s, addr, value);
        if (eff.fault) {
            outcome = raise(s, eff.fault->kind, eff.fault->addr, eff.fault->what);
            return false;
        }
        reset_requested = eff.reset_requested;
        return true;
    };

    using isa::Op;
    switch (in.op) {
        case Op::Nop: break;
        case Op::Halt:
            s.run = RunState::Halted;
            outcome = StepOutcome::Halted;
            break;
        case Op::Cpsid: s.regs.primask = 1; break;
        case Op::Cpsie: s.regs.primask = 0; break;

        case Op::Push: {
            uint32_t count = static_cast<uint32_t>(std::popcount(in.regmask));
            uint32_t base = s.regs.sp - 4 * count;
            uint32_t slot = base;
            for (uint8_t reg = 0; reg < 16 && outcome == StepOutcome::Ok; ++reg) {
                if (!(in.regmask & (1u << reg))) continue;
                if (!do_store(slot, s.regs.get(reg))) break;
                slot += 4;
            }
            if (outcome == StepOutcome::Ok) s.regs.sp = base;
            break;
        }
        case Op::Pop: {
            uint32_t slot = s.regs.sp;
            uint32_t values[16];
            uint8_t regs_order[16];
            int n = 0;
            for (uint8_t reg = 0; reg < 16; ++reg) {
                if (!(in.regmask & (1u << reg))) continue;
                uint32_t v = 0;
                if (auto f = load_word(s, slot, false, v)) {
                    outcome = raise(s, f->kind, f->addr, f->what);
                    break;
                }
                values[n] = v;
                regs_order[n++] = reg;
                slot += 4;
            }
            if (outcome == StepOutcome::Ok) {
                s.regs.sp = slot;
                for (int i = 0; i < n; ++i) {
                    if (regs_order[i] == isa::kRegPc) next_pc = values[i];
                    else s.regs.set(regs_order[i], values[i]);
                }
            }
            break;
        }

        case Op::Ldr: {
            uint32_t v = 0;
            if (auto f = load_word(s, s.regs.get(in.rn), false, v))
                outcome = raise(s, f->kind, f->addr, f->what);
            else s.regs.set(in.rd, v);
            break;
        }
        case Op::Str:
            do_store(s.regs.get(in.rn), s.regs.get(in.rd));
            break;

        case Op::Movw:
            s.regs.set(in.rd, (s.regs.get(in.rd) & 0xFFFF0000u) | in.imm16);
            break;
        case Op::Movt:
            s.regs.set(in.rd, (s.regs.get(in.rd) & 0x0000FFFFu) |
                                  (static_cast<uint32_t>(in.imm16) << 16));
            break;
        case Op::Addi:
            s.regs.set(in.rd, s.regs.get(in.rd) +
                                  static_cast<uint32_t>(static_cast<int32_t>(
                                      static_cast<int16_t>(in.imm16))));
            break;
        case Op::Mov: s.regs.set(in.rd, s.regs.get(in.rn)); break;

        case Op::CmpReg: {
            uint32_t a = s.regs.get(in.rd), b = s.regs.get(in.rn);
            s.regs.flag_z = a == b;
            s.regs.flag_c = a >= b;
            break;
        }
        case Op::CmpImm: {
            uint32_t a = s.regs.get(in.rd), b = in.imm16;
            s.regs.flag_z = a == b;
            s.regs.flag_c = a >= b;
            break;
        }

        case Op::B: next_pc = fetch_pc + 4 + 4 * in.off24; break;
        case Op::Beq: if (s.regs.flag_z) next_pc = fetch_pc + 4 + 4 * in.off24; break;
        case Op::Bne: if (!s.regs.flag_z) next_pc = fetch_pc + 4 + 4 * in.off24; break;
        case Op::Blo: if (!s.regs.flag_c) next_pc = fetch_pc + 4 + 4 * in.off24; break;
        case Op::Bhs: if (s.regs.flag_c) next_pc = fetch_pc + 4 + 4 * in.off24; break;
        case Op::Bl:
            s.regs.lr = fetch_pc + 4;
            next_pc = fetch_pc + 4 + 4 * in.off24;
            break;
        case Op::Bx: next_pc = s.regs.get(in.rd); break;

        case Op::DiceCdi: outcome = exec_dicecdi(s, s.regs.get(in.rd)); break;
        case Op::DiceId: outcome = exec_diceid(s, s.regs.get(in.rd)); break;
        case Op::SbVerify: outcome = exec_sbverify(s, s.regs.get(in.rd)); break;
        case Op::Sign: outcome = exec_sign(s, s.regs.get(in.rd)); break;
    }

    s.instr_count++;
    if (outcome != StepOutcome::Ok) return outcome;
    if (reset_requested) {
        do_reset(s);
        return StepOutcome::Reset;
    }
    s.regs.pc = next_pc;
    return StepOutcome::Ok;
}

RunResult run_until(DeviceState& state, const std::function<bool(const DeviceState&)>& stop,
                    uint64_t fuel) {
    RunResult res{RunResult::Kind::FuelExhausted, 0};
    for (uint64_t i = 0; i < fuel; ++i) {
        if (stop(state)) {
            res.kind = RunResult::Kind::Stopped;
            return res;
        }
        StepOutcome out = step(state);
        res.steps++;
        if (out == StepOutcome::Trapped) {
            res.kind = RunResult::Kind::Trapped;
            return res;
        }
        if (out == StepOutcome::Halted) {
            res.kind = RunResult::Kind::Halted;
            return res;
        }
    }
    return res;
}

bool in_main_loop(const DeviceState& state) {
    return state.run == RunState::Running && state.regs.sp == mm::kLoopSp &&
           peek_word(state, mm::kRunState) == mm::kRunMagic &&
           peek_word(state, mm::kRxFlag) == 0;
}

RunResult boot_to_main_loop(DeviceState& state, uint64_t fuel) {
    return run_until(state, in_main_loop, fuel);
}

Delivery deliver_datagram(DeviceState& state, ByteView payload, uint64_t fuel) {
    Delivery d{Delivery::Kind::Rejected, 0, 0};
    if (payload.size() > mm::kMtu) return d;
    if (!in_main_loop(state)) return d;

    uint64_t resets_before = state.reset_count;
    poke(state, mm::kRxBuf, payload);
    uint32_t words = static_cast<uint32_t>((payload.size() + 3) / 4);
    poke_word(state, mm::kRxWords, words);
    poke_word(state, mm::kRxFlag, 1);

    RunResult res = run_until(state, in_main_loop, fuel);
    d.steps = res.steps;
    d.resets_delta = state.reset_count - resets_before;
    switch (res.kind) {
        case RunResult::Kind::Stopped:
            d.kind = d.resets_delta ? Delivery::Kind::ResetAndRebooted
                                    : Delivery::Kind::NormalReturn;
            break;
        case RunResult::Kind::Trapped: d.kind = Delivery::Kind::Trapped; break;
        case RunResult::Kind::Halted: d.kind = Delivery::Kind::Halted; break;
        case RunResult::Kind::FuelExhausted: d.kind = Delivery::Kind::FuelExhausted; break;
    }
    return d;
}

Bytes peek(const DeviceState& state, uint32_t addr, uint32_t len) {
    Bytes out;
    out.reserve(len);
    for (uint32_t i = 0; i < len; ++i) {
        uint32_t a = addr + i;
        if (in_flash(a)) out.push_back(state.flash[a]);
        else if (in_ram(a)) out.push_back(state.ram[a - mm::kRamBase]);
        else throw std::out_of_range("peek outside flash/RAM");
    }
    return out;
}

void poke(DeviceState& state, uint32_t addr, ByteView data) {
    for (size_t i = 0; i < data.size(); ++i) {
        uint32_t a = addr + static_cast<uint32_t>(i);
        if (in_flash(a)) state.flash[a] = data[i];
        else if (in_ram(a)) state.ram[a - mm::kRamBase] = data[i];
        else throw std::out_of_range("poke outside flash/RAM");
    }
}

uint32_t peek_word(const DeviceState& state, uint32_t addr) {
    Bytes b = peek(state, addr, 4);
    return get_u32le(b, 0);
}

void poke_word(DeviceState& state, uint32_t addr, uint32_t value) {
    Bytes b;
    put_u32le(b, value);
    poke(state, addr, b);
}

}  // namespace dicelab::sim
