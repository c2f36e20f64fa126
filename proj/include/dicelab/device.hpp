#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "dicelab/bytes.hpp"
#include "dicelab/isa.hpp"
#include "dicelab/memmap.hpp"

// Simulated microcontroller: 1 MB flash behind an NVMC, 256 KB RAM, ACL flash
// protection, PRIMASK interrupt masking, an instruction-fuel watchdog and a
// soft-reset register. DeviceState is a plain value; stepping is
// single-threaded and deterministic for a fixed seed.
namespace dicelab::sim {

enum class TrapKind { BusFault, WriteFault, AccessFault, UndefFault };

struct Trap {
    TrapKind kind;
    uint32_t pc;
    uint32_t addr;
    const char* what;
};

const char* trap_name(TrapKind kind);

enum class RunState { Running, Halted, Trapped };

struct RegisterFile {
    std::array<uint32_t, 13> r{};
    uint32_t sp = 0;
    uint32_t lr = 0;
    uint32_t pc = 0;
    uint8_t primask = 0;
    bool flag_z = false;
    bool flag_c = false;

    uint32_t get(uint8_t idx) const;
    void set(uint8_t idx, uint32_t value);
};

enum class NvmcConfig : uint32_t { ReadOnly = 0, WriteEnable = 1, EraseEnable = 2 };

struct NvmcState {
    NvmcConfig config = NvmcConfig::ReadOnly;
    uint32_t erasepage = 0;
};

enum class AclPerm : uint32_t { None = 0, NoWrite = 1, NoReadNoWrite = 2 };

struct AclRegion {
    uint32_t start = 0;
    uint32_t size = 0;
    AclPerm perm = AclPerm::None;
    bool locked = false;  // set when PERM is written; regs frozen until reset

    bool covers(uint32_t addr) const { return locked && addr - start < size; }
};

struct AwdtState {
    bool armed = false;
    bool key_set = false;
    uint64_t period = 0;
    uint64_t deadline = 0;
    uint32_t key_addr = 0;
    uint32_t last_counter = 0;
};

// Timer interrupt model: fires between instructions when armed and PRIMASK is
// clear. The (abstracted) handler clobbers the caller-saved registers
// r0-r3/r12 and the 32 bytes below sp; lr and the callee-saved registers
// survive, so firmware keeps live state in r4+.
struct TimerModel {
    bool enabled = true;  // sim-level switch; firmware still has to arm it
    bool armed = false;
    uint32_t gap_lo = 200;
    uint32_t gap_hi = 2000;
    uint64_t next_fire = 0;
    uint64_t fires = 0;
};

struct SimConfig {
    uint64_t seed = 1;
    bool timer_enabled = true;
    uint32_t timer_gap_lo = 200;
    uint32_t timer_gap_hi = 2000;
};

struct DeviceState {
    Bytes flash;
    Bytes ram;
    RegisterFile regs;
    NvmcState nvmc;
    std::array<AclRegion, mm::kAclRegionCount> acl{};
    AwdtState awdt;
    TimerModel timer;
    RunState run = RunState::Running;
    std::optional<Trap> trap;
    uint64_t instr_count = 0;
    uint64_t reset_count = 0;
    uint64_t watchdog_resets = 0;
    std::mt19937_64 rng{1};
    std::ostream* trace = nullptr;  // non-owning; line-per-instruction text
};

struct ImageSection {
    std::string name;
    uint32_t base = 0;
    Bytes bytes;
};

DeviceState make_device(const std::vector<ImageSection>& sections,
                        std::span<const uint8_t, 32> uds, const SimConfig& config = {});

// Registers/ACL/NVMC/AWDT to power-on values, RAM cleared, flash preserved.
void power_on_reset(DeviceState& state);

enum class StepOutcome { Ok, Trapped, Halted, Reset };
StepOutcome step(DeviceState& state);

struct RunResult {
    enum class Kind { Stopped, Trapped, Halted, FuelExhausted } kind;
    uint64_t steps = 0;
};

RunResult run_until(DeviceState& state, const std::function<bool(const DeviceState&)>& stop,
                    uint64_t fuel);

// Boots a fresh or just-reset device to the app main loop.
RunResult boot_to_main_loop(DeviceState& state, uint64_t fuel = 4'000'000);
bool in_main_loop(const DeviceState& state);

struct Delivery {
    enum class Kind { NormalReturn, ResetAndRebooted, Trapped, Halted, FuelExhausted, Rejected };
    Kind kind;
    uint64_t steps = 0;
    uint64_t resets_delta = 0;
};

// Places a payload in the firmware's receive buffer and runs the device until
// it is back at the main-loop poll, has rebooted to it, trapped, or halted.
Delivery deliver_datagram(DeviceState& state, ByteView payload, uint64_t fuel = 4'000'000);

// Host-side introspection (debugger semantics: bypasses ACL).
Bytes peek(const DeviceState& state, uint32_t addr, uint32_t len);
void poke(DeviceState& state, uint32_t addr, ByteView data);
uint32_t peek_word(const DeviceState& state, uint32_t addr);
void poke_word(DeviceState& state, uint32_t addr, uint32_t value);

}  // namespace dicelab::sim
