#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::gan::{decode_checkpoint, encode_checkpoint};

// The first two bytes give the length of the parameter blob; the rest is
// the sidecar text.
fuzz_target!(|bytes: &[u8]| {
    if bytes.len() < 2 {
        return;
    }
    let split = (u16::from_le_bytes([bytes[0], bytes[1]]) as usize).min(bytes.len() - 2);
    let (params, sidecar) = bytes[2..].split_at(split);
    let Ok(sidecar) = std::str::from_utf8(sidecar) else {
        return;
    };
    if let Ok(ckpt) = decode_checkpoint(params, sidecar) {
        let (p, s) = encode_checkpoint(&ckpt);
        decode_checkpoint(&p, &s).expect("encoded checkpoint decodes");
    }
});
