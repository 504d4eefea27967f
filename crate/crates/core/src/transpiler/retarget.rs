//! Branch retargeting and out-of-range trampolines.

use alloc::vec::Vec;

use super::{Line, Op, TranspileError, Unit, TIM_WORDS};
use crate::isa::{Opcode, Reg};

/// Rewrites transfers whose offsets no longer fit, until every one does.
///
/// A BEQ/BNE beyond ±40 becomes the inverted branch over a JAL to the
/// target. A JAL beyond ±121 becomes an absolute jump through T8. Each
/// rewrite can only push other transfers further apart, so the loop ends.
/// Offsets themselves are computed from final label positions at emission.
pub fn retarget_branches(unit: &mut Unit) -> Result<(), TranspileError> {
    let br_limit = Opcode::Beq.imm_range().expect("branch offset").1 as i64;
    let jal_limit = Opcode::Jal.imm_range().expect("jump offset").1 as i64;
    loop {
        let addr = unit.addresses();
        let at = unit.label_lines();
        let mut changed = false;
        let mut i = 0;
        while i < unit.lines.len() {
            let here = addr[i];
            let offset = |t: usize| addr[at[t].expect("label placed")] as i64 - here as i64;
            match unit.lines[i].op {
                Op::Branch { eq, cond, b, target } if offset(target).abs() > br_limit => {
                    let skip = unit.fresh("skip");
                    unit.lines[i].op = Op::Branch { eq: !eq, cond, b, target: skip };
                    let fixed = unit.lines[i].fixed;
                    unit.lines.insert(i + 1, Line { labels: Vec::new(), op: Op::Jump { link: Reg::T8, target }, fixed });
                    unit.lines[i + 2].labels.push(skip);
                    changed = true;
                    break;
                }
                Op::Jump { link, target } if offset(target).abs() > jal_limit => {
                    unit.lines[i].op = Op::FarJump { link, target };
                    changed = true;
                    break;
                }
                _ => {}
            }
            i += 1;
        }
        if unit.words() > TIM_WORDS {
            return Err(TranspileError::ProgramTooLarge { words: unit.words() });
        }
        if !changed {
            return Ok(());
        }
    }
}
