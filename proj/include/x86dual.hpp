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

#ifndef X86DUAL_X86DUAL_HPP_
#define X86DUAL_X86DUAL_HPP_

#include "x86dual/addressing.hpp"
#include "x86dual/arith.hpp"
#include "x86dual/decoder.hpp"
#include "x86dual/fault.hpp"
#include "x86dual/instruction.hpp"
#include "x86dual/isa.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/memory.hpp"
#include "x86dual/operand_access.hpp"
#include "x86dual/pointer_flow.hpp"
#include "x86dual/segmentation.hpp"
#include "x86dual/selection.hpp"

#endif  // X86DUAL_X86DUAL_HPP_
