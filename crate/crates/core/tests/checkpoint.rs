use polyglot_core::checkpoint::{load_into, load_params, read_arrays, save_params, write_arrays};
use polyglot_core::nn::init_uniform;
use polyglot_core::{seeded_rng, ParamStore, Tensor};

#[test]
fn save_load_is_bit_identical_for_f32() {
    let mut rng = seeded_rng(9);
    let mut store = ParamStore::<f32>::new();
    store.add("a.weight", init_uniform(&mut rng, &[3, 4], 1.0));
    store.add("b", init_uniform(&mut rng, &[1, 7], 10.0));
    store.add("ü-名", Tensor::scalar(-0.0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.bin");
    save_params(&store, &path).unwrap();
    let back: ParamStore<f32> = load_params(&path).unwrap();
    assert_eq!(back.len(), 3);
    for id in store.ids() {
        assert_eq!(store.name(id), back.name(id));
        let (x, y) = (store.value(id), back.value(id));
        assert_eq!(x.shape(), y.shape());
        for (a, b) in x.data().iter().zip(y.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    let mut other = ParamStore::<f32>::new();
    other.add("b", Tensor::zeros(&[1, 7]));
    load_into(&mut other, &path).unwrap();
    assert_eq!(other.value(other.id("b").unwrap()), store.value(store.id("b").unwrap()));
}

#[test]
fn layout_is_little_endian_and_documented() {
    let t = Tensor::<f32>::matrix(1, 2, vec![1.0, -2.5]);
    let mut buf = Vec::new();
    write_arrays(&mut buf, &[("w", &t)]).unwrap();
    let mut want = Vec::new();
    want.extend_from_slice(b"PGCK");
    want.extend_from_slice(&1u32.to_le_bytes());
    want.extend_from_slice(&1u32.to_le_bytes());
    want.extend_from_slice(&1u32.to_le_bytes());
    want.extend_from_slice(b"w");
    want.extend_from_slice(&2u32.to_le_bytes());
    want.extend_from_slice(&1u64.to_le_bytes());
    want.extend_from_slice(&2u64.to_le_bytes());
    want.extend_from_slice(&1.0f32.to_le_bytes());
    want.extend_from_slice(&(-2.5f32).to_le_bytes());
    assert_eq!(buf, want);
}

#[test]
fn corrupt_files_are_rejected() {
    let mut bad = b"XXXX".to_vec();
    bad.extend_from_slice(&[0; 8]);
    assert!(read_arrays::<_, f32>(&mut bad.as_slice()).is_err());
    let t = Tensor::<f32>::matrix(1, 2, vec![1.0, 2.0]);
    let mut buf = Vec::new();
    write_arrays(&mut buf, &[("w", &t)]).unwrap();
    buf.truncate(buf.len() - 2);
    assert!(read_arrays::<_, f32>(&mut buf.as_slice()).is_err());
}
