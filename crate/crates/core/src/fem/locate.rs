//! Bounding-volume hierarchy over element boxes for point location.

const LEAF: usize = 8;

#[derive(Clone, Debug)]
struct Node {
    bbox: [f64; 4],
    /// Children for inner nodes, `usize::MAX` for leaves.
    left: usize,
    right: usize,
    start: usize,
    end: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Locator {
    nodes: Vec<Node>,
    order: Vec<usize>,
    boxes: Vec<[f64; 4]>,
}

fn union(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])]
}

fn contains(b: &[f64; 4], p: [f64; 2]) -> bool {
    p[0] >= b[0] && p[0] <= b[2] && p[1] >= b[1] && p[1] <= b[3]
}

impl Locator {
    /// Build from boxes `[xmin, ymin, xmax, ymax]`.
    pub fn build(boxes: &[[f64; 4]]) -> Self {
        let mut loc = Locator { nodes: Vec::new(), order: (0..boxes.len()).collect(), boxes: boxes.to_vec() };
        if !boxes.is_empty() {
            loc.split(0, boxes.len());
        }
        loc
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let bbox = self.order[start..end]
            .iter()
            .fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |acc, &i| {
                union(acc, self.boxes[i])
            });
        let me = self.nodes.len();
        self.nodes.push(Node { bbox, left: usize::MAX, right: usize::MAX, start, end });
        if end - start > LEAF {
            let axis = if bbox[2] - bbox[0] >= bbox[3] - bbox[1] { 0 } else { 1 };
            let boxes = &self.boxes;
            let centre = |i: usize| boxes[i][axis] + boxes[i][axis + 2];
            let mid = (start + end) / 2;
            self.order[start..end]
                .select_nth_unstable_by(mid - start, |&a, &b| centre(a).total_cmp(&centre(b)).then(a.cmp(&b)));
            let l = self.split(start, mid);
            let r = self.split(mid, end);
            self.nodes[me].left = l;
            self.nodes[me].right = r;
        }
        me
    }

    /// Append the indices of boxes containing `p`.
    pub fn candidates(&self, p: [f64; 2], out: &mut Vec<usize>) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !contains(&node.bbox, p) {
                continue;
            }
            if node.left == usize::MAX {
                out.extend(self.order[node.start..node.end].iter().filter(|&&i| contains(&self.boxes[i], p)));
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
    }
}
