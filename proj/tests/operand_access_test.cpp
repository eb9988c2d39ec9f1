// Copyright 2026 The x86dual Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <random>
#include <span>

#include "programs.hpp"
#include "x86dual/operand_access.hpp"

namespace x86dual {
namespace {

using testkit::flat_machine;

Prefixes with_override(Seg s) {
  Prefixes p;
  p.seg_override = s;
  return p;
}

TEST(SelectSegmentRegister, Examples) {
  EXPECT_EQ(select_segment_register(ProcMode::kMode32, with_override(Seg::kES),
                                    Seg::kDS),
            Seg::kES);
  EXPECT_EQ(select_segment_register(ProcMode::kMode64, with_override(Seg::kSS),
                                    Seg::kDS),
            Seg::kDS);
  // BP+DI under 16-bit addressing defaults to SS.
  MachineState s = flat_machine(ProcMode::kMode32, false);
  ByteCursor none(std::span<const std::uint8_t>{});
  auto ea = effective_addr_16(s, ModRM{0, 0, 3}, none);
  ASSERT_TRUE(ea.ok());
  EXPECT_EQ(select_segment_register(ProcMode::kMode32, Prefixes{},
                                    ea->default_seg),
            Seg::kSS);
}

TEST(SelectSegmentRegister, Mode64HonorsFsAndGsOnly) {
  for (Seg o : {Seg::kES, Seg::kCS, Seg::kSS, Seg::kDS}) {
    EXPECT_EQ(select_segment_register(ProcMode::kMode64, with_override(o),
                                      Seg::kSS),
              Seg::kSS);
  }
  EXPECT_EQ(select_segment_register(ProcMode::kMode64, with_override(Seg::kFS),
                                    Seg::kSS),
            Seg::kFS);
  EXPECT_EQ(select_segment_register(ProcMode::kMode64, with_override(Seg::kGS),
                                    Seg::kDS),
            Seg::kGS);
}

TEST(SelectOperandSize, Examples) {
  Prefixes both;
  both.rex = 0x8;
  both.opsize_override = true;
  const MachineState l = flat_machine(ProcMode::kMode64);
  EXPECT_EQ(select_operand_size(l, ProcMode::kMode64, both, false, false), 8u);

  const MachineState d0 = flat_machine(ProcMode::kMode32, false);
  Prefixes p66;
  p66.opsize_override = true;
  EXPECT_EQ(select_operand_size(d0, ProcMode::kMode32, p66, false, false), 4u);

  const MachineState d1 = flat_machine(ProcMode::kMode32, true);
  EXPECT_EQ(select_operand_size(d1, ProcMode::kMode32, Prefixes{}, false,
                                false),
            4u);
  EXPECT_EQ(select_operand_size(d1, ProcMode::kMode32, p66, false, true), 1u);
  EXPECT_EQ(select_operand_size(l, ProcMode::kMode64, Prefixes{}, true, false),
            8u);
}

TEST(SelectAddressSize, Examples) {
  Prefixes p67;
  p67.addrsize_override = true;
  EXPECT_EQ(select_address_size(flat_machine(ProcMode::kMode64),
                                ProcMode::kMode64, p67),
            4u);
  EXPECT_EQ(select_address_size(flat_machine(ProcMode::kMode32, true),
                                ProcMode::kMode32, Prefixes{}),
            4u);
  EXPECT_EQ(select_address_size(flat_machine(ProcMode::kMode32, false),
                                ProcMode::kMode32, p67),
            4u);
}

TEST(RegisterOperand, HighByteRegistersWithoutRex) {
  EXPECT_EQ(register_operand(4, 1, Prefixes{}), OperandLocation::Register(0, true));
  EXPECT_EQ(register_operand(7, 1, Prefixes{}), OperandLocation::Register(3, true));
  Prefixes rex;
  rex.rex = 0;
  EXPECT_EQ(register_operand(4, 1, rex), OperandLocation::Register(4));
  EXPECT_EQ(register_operand(4, 2, Prefixes{}), OperandLocation::Register(4));
}

TEST(OperandFromModrm, RegisterDirect) {
  MachineState s = flat_machine(ProcMode::kMode32);
  s.gpr[kRcx] = 0x55;
  ByteCursor none(std::span<const std::uint8_t>{});
  auto op = operand_from_modrm(s, ProcMode::kMode32, Prefixes{},
                               ModRM{3, 0, 1}, none, 4, AccessIntent::kRead, 0);
  ASSERT_TRUE(op.ok());
  EXPECT_EQ(op->value, 0x55u);
  EXPECT_EQ(op->location, OperandLocation::Register(1));
  EXPECT_EQ(op->disp_bytes, 0u);
}

TEST(OperandFromModrm, Disp32ThroughDsBase) {
  MachineState s = flat_machine(ProcMode::kMode32);
  s.seg(Seg::kDS).base = 0x1000;
  s.memory.write_byte(0x1100, 0x42);
  const std::uint8_t disp[] = {0x00, 0x01, 0x00, 0x00};
  ByteCursor src(disp);
  auto op = operand_from_modrm(s, ProcMode::kMode32, Prefixes{},
                               ModRM{0, 0, 5}, src, 1, AccessIntent::kRead, 0);
  ASSERT_TRUE(op.ok());
  EXPECT_EQ(op->value, 0x42u);
  EXPECT_EQ(op->location, OperandLocation::Memory(Seg::kDS, 0x100));
  EXPECT_EQ(op->disp_bytes, 4u);
}

TEST(OperandFromModrm, LimitViolationFaults) {
  MachineState s = flat_machine(ProcMode::kMode32);
  s.seg(Seg::kDS).limit = 0xFF;
  const std::uint8_t disp[] = {0x00, 0x01, 0x00, 0x00};
  ByteCursor src(disp);
  auto op = operand_from_modrm(s, ProcMode::kMode32, Prefixes{},
                               ModRM{0, 0, 5}, src, 4, AccessIntent::kRead, 0);
  ASSERT_FALSE(op.ok());
  EXPECT_EQ(op.fault().kind, FaultKind::kGP);
}

TEST(OperandFromModrm, Mode64SegmentOverrideIgnoredExceptFsGs) {
  MachineState s = flat_machine(ProcMode::kMode64);
  s.seg(Seg::kES).base = 0x9000;  // ignored in 64-bit mode
  s.msr_gs_base = 0x7000;
  s.gpr[kRax] = 0x100;
  s.memory.write_byte(0x100, 0x11);
  s.memory.write_byte(0x7100, 0x22);
  ByteCursor none(std::span<const std::uint8_t>{});
  auto es = operand_from_modrm(s, ProcMode::kMode64, with_override(Seg::kES),
                               ModRM{0, 0, 0}, none, 1, AccessIntent::kRead, 0);
  ASSERT_TRUE(es.ok());
  EXPECT_EQ(es->value, 0x11u);
  ByteCursor none2(std::span<const std::uint8_t>{});
  auto gs = operand_from_modrm(s, ProcMode::kMode64, with_override(Seg::kGS),
                               ModRM{0, 0, 0}, none2, 1, AccessIntent::kRead, 0);
  ASSERT_TRUE(gs.ok());
  EXPECT_EQ(gs->value, 0x22u);
}

TEST(OperandToLocation, RegisterZeroExtends) {
  MachineState s = flat_machine(ProcMode::kMode64);
  s.gpr[kRax] = ~0ull;
  ASSERT_TRUE(operand_to_location(s, ProcMode::kMode64,
                                  OperandLocation::Register(0), 4, 0x7)
                  .ok());
  EXPECT_EQ(s.gpr[kRax], 0x7u);
}

TEST(OperandToLocation, MemoryRoundTrip) {
  MachineState s = flat_machine(ProcMode::kMode32);
  s.seg(Seg::kDS).base = 0x2000;
  const OperandLocation loc = OperandLocation::Memory(Seg::kDS, 0x40);
  ASSERT_TRUE(operand_to_location(s, ProcMode::kMode32, loc, 2, 0xBEEF).ok());
  auto back = read_location(s, ProcMode::kMode32, loc, 2);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, 0xBEEFu);
  EXPECT_EQ(s.memory.read_byte(0x2040), 0xEF);
}

TEST(OperandToLocation, WritePastLimitLeavesMemory) {
  MachineState s = flat_machine(ProcMode::kMode32);
  s.seg(Seg::kDS).limit = 0x40;
  const MachineState before = s;
  auto st = operand_to_location(s, ProcMode::kMode32,
                                OperandLocation::Memory(Seg::kDS, 0x3F), 4, 1);
  ASSERT_FALSE(st.ok());
  EXPECT_EQ(st.fault().kind, FaultKind::kGP);
  EXPECT_EQ(s, before);
}

TEST(OperandAccess, ReadThenWriteBackIsNoOp) {
  std::mt19937_64 rng(23);
  for (ProcMode mode : {ProcMode::kMode32, ProcMode::kMode64}) {
    MachineState s = flat_machine(mode);
    for (int i = 0; i < 2000; ++i) {
      for (auto& r : s.gpr) r = rng() & 0xFFFF;
      s.memory.write_byte(rng() & 0xFFFF, static_cast<std::uint8_t>(rng()));
      const ModRM modrm{static_cast<std::uint8_t>(rng() % 4),
                        0, static_cast<std::uint8_t>(rng() % 8)};
      const std::uint8_t tail[] = {static_cast<std::uint8_t>(rng()),
                                   static_cast<std::uint8_t>(rng()), 0, 0, 0};
      ByteCursor src(tail);
      static constexpr unsigned kSizes[] = {1, 2, 4, 8};
      const unsigned n = kSizes[rng() % (mode == ProcMode::kMode64 ? 4 : 3)];
      auto op = operand_from_modrm(s, mode, Prefixes{}, modrm, src, n,
                                   AccessIntent::kRead, testkit::kCodeBase);
      if (!op.ok()) continue;
      const MachineState before = s;
      // Register values are below 2^16, so even a zero-extending 32-bit
      // write-back is a no-op.
      ASSERT_TRUE(
          operand_to_location(s, mode, op->location, n, op->value).ok());
      ASSERT_EQ(s, before);
    }
  }
}

TEST(OperandAccess, Mode64MemoryPathDegeneratesToLinearRead) {
  std::mt19937_64 rng(29);
  MachineState s = flat_machine(ProcMode::kMode64);
  for (auto& seg : s.segs) seg.base = 0x12340000;  // ignored
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t addr = rng() & 0x0000'7FFF'FFFF'FFF0;
    s.memory.write_byte(addr, static_cast<std::uint8_t>(rng()));
    s.gpr[kRax] = addr;
    ByteCursor none(std::span<const std::uint8_t>{});
    auto op = operand_from_modrm(s, ProcMode::kMode64, Prefixes{},
                                 ModRM{0, 0, 0}, none, 8, AccessIntent::kRead,
                                 0);
    ASSERT_TRUE(op.ok());
    ASSERT_EQ(op->value, read_linear(s, addr, 8));
  }
}

}  // namespace
}  // namespace x86dual
