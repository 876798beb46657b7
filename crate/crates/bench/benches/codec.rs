use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fountain_swarm::codec::{self, Decoder};
use fountain_swarm::gf256::mul_add_slice;
use fountain_swarm::rng::stream;

fn field(c: &mut Criterion) {
    let src: Vec<u8> = (0..4096).map(|i| (i * 7 + 3) as u8).collect();
    let mut dst = vec![0u8; 4096];
    let mut g = c.benchmark_group("gf256");
    g.throughput(Throughput::Bytes(src.len() as u64));
    g.bench_function("mul_add_slice_4k", |b| {
        b.iter(|| mul_add_slice(black_box(&mut dst), black_box(&src), black_box(0x53)))
    });
    g.finish();
}

fn decoder(c: &mut Criterion) {
    let mut g = c.benchmark_group("decode");
    for k in [5usize, 16, 32] {
        let mut rng = stream(1, k as u64);
        let source = codec::split_file(&vec![0xA5; 1000], k).unwrap();
        let chunks: Vec<_> = (0..k + 4)
            .map(|_| codec::encode(&source, &codec::draw_coefficients(k, &mut rng)).unwrap())
            .collect();
        g.bench_with_input(
            BenchmarkId::new("absorb_to_full_rank", k),
            &chunks,
            |b, chunks| {
                b.iter(|| {
                    let mut dec = Decoder::new(k, source.chunk_len());
                    for ch in chunks {
                        if dec.absorb(ch).unwrap() == k {
                            break;
                        }
                    }
                    black_box(dec.decode().unwrap())
                })
            },
        );
    }
    g.finish();
}

criterion_group!(benches, field, decoder);
criterion_main!(benches);
