use crate::SimError;

/// Inverse of [`deaddrop_core::suite::length_prefixed`].
pub fn split_fields(mut bytes: &[u8]) -> Result<Vec<&[u8]>, SimError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 4 {
            return Err(SimError::Decode("truncated length prefix".into()));
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        bytes = &bytes[4..];
        if bytes.len() < len {
            return Err(SimError::Decode("truncated field".into()));
        }
        out.push(&bytes[..len]);
        bytes = &bytes[len..];
    }
    Ok(out)
}

pub fn fixed<const N: usize>(b: &[u8]) -> Result<[u8; N], SimError> {
    b.try_into()
        .map_err(|_| SimError::Decode(format!("expected {N} bytes, got {}", b.len())))
}

pub fn u64_field(b: &[u8]) -> Result<u64, SimError> {
    Ok(u64::from_be_bytes(fixed(b)?))
}

pub fn utf8(b: &[u8]) -> Result<String, SimError> {
    String::from_utf8(b.to_vec()).map_err(|e| SimError::Decode(e.to_string()))
}
