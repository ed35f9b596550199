use alloc::vec::Vec;

use super::SmfError;

/// Largest value a 4-byte variable-length quantity can hold (2^28 - 1).
pub const VLQ_MAX: u32 = (1 << 28) - 1;

/// Decodes a variable-length quantity from the front of `bytes`.
///
/// Returns the value and the number of bytes consumed (1 to 4).
pub fn read_vlq(bytes: &[u8]) -> Result<(u32, usize), SmfError> {
    let mut value = 0u32;
    for i in 0..4 {
        let byte = *bytes.get(i).ok_or(SmfError::UnexpectedEof)?;
        value = (value << 7) | u32::from(byte & 0x7F);
        if byte & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(SmfError::UnterminatedVlq)
}

/// Encodes `value` as a minimal-length variable-length quantity.
pub fn write_vlq(value: u32) -> Result<Vec<u8>, SmfError> {
    let mut out = Vec::with_capacity(4);
    push_vlq(&mut out, value)?;
    Ok(out)
}

pub(crate) fn push_vlq(out: &mut Vec<u8>, value: u32) -> Result<(), SmfError> {
    if value > VLQ_MAX {
        return Err(SmfError::ValueTooLarge(u64::from(value)));
    }
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut rest = value;
    loop {
        groups[n] = (rest & 0x7F) as u8;
        n += 1;
        rest >>= 7;
        if rest == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let continuation = if i > 0 { 0x80 } else { 0 };
        out.push(groups[i] | continuation);
    }
    Ok(())
}
