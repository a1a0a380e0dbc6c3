"""Writes the MiniWebShop fixture catalog, tasks, and scripted playbooks.

Ranking, pagination, and scoring are re-implemented here from the written
rules so the playbooks are authored independently of the Rust code.
"""
import json
import os
import re

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PAGE = 3


def item(id, title, price, attributes, options=None, description="", features=None):
    return {
        "id": id,
        "title": title,
        "price": price,
        "attributes": attributes,
        "options": options or {},
        "description": description,
        "features": features or [],
    }


DEO_SCENTS = ["assorted scents", "bright citrus", "citrus", "calming lavender", "ginger fresh", "simply non-scents"]
DEO_SIZES = ["travel set (4-pack)", "3 ounce (pack of 1)", "3-ounce (2-pack)"]

CATALOG = [
    # microphones
    item("B0972Q1T8T", "Cosycost USB Microphone,Condenser Computer PC Gaming Microphone for PS4/5 Laptop Windows Mac OS Android Phone,Noise Cancelling Instant Mute,Studio Mic for Voice,Music Recording,Podcasting,Streaming", 32.99, ["noise cancelling", "cosycost", "usb microphone"], description="Plug and play condenser microphone with instant mute."),
    item("B072L2D6LY", "Andrea Communications NC-255VM USB On-Ear Stereo USB Computer Headset with Noise-Canceling Microphone, in-Line Volume/Mute Controls, and Plug", 34.59, ["noise cancelling", "usb"]),
    item("B071H84LTJ", "Andrea Communications NC-455VM USB Over-Ear Circumaural Stereo USB Computer Headset with Noise-Canceling Microphone, in-Line Volume/Mute Controls, and Plug", 49.24, ["noise canceling"]),
    item("B08DXB4R1M", "Studio Condenser Podcast Microphone Kit with Boom Arm and Pop Filter, XLR", 89.99, ["condenser", "podcast"]),
    # deodorants
    item("B078GWRC1J", "Bright Citrus Deodorant by Earth Mama, Natural and Safe for Sensitive Skin, Pregnancy and Breastfeeding, Contains Organic Calendula 3-Ounce", 10.99, ["3 ounce bottle", "bright citrus", "sensitive skin"], {"scent": DEO_SCENTS, "size": DEO_SIZES}, "Gentle on sensitive skin."),
    item("B078GTKVXY", "Ginger Fresh Deodorant by Earth Mama, Natural and Safe for Sensitive Skin, Pregnancy and Breastfeeding, Contains Organic Calendula 3-Ounce", 10.99, ["3 ounce bottle", "sensitive skin"], {"scent": DEO_SCENTS, "size": DEO_SIZES}),
    item("B08KBVJ4XN", "Barrel and Oak - Aluminum-Free Deodorant, Deodorant for Men, Essential Oil-Based Scent, 24-Hour Odor Protection, Cedar & Patchouli Blend, Gentle on Sensitive Skin (Mountain Sage, 2.7 oz, 2-Pack)", 15.95, ["sensitive skin", "aluminum free"]),
    item("B07Q2ZKCRT", "Luxury Citrus Deodorant Gift Set, Bright Citrus and Sandalwood, 3 Ounce Bottle, Sensitive Skin Formula", 58.00, ["3 ounce bottle", "bright citrus", "sensitive skin"]),
    # usb cables
    item("B01GGKYKQM", "High Speed USB Cable 3 Foot, Braided Type-C Charger Cord, Red", 8.99, ["high speed", "3 foot", "red"], {"color": ["black", "red", "white"]}),
    item("B01GGKZ0V6", "USB Cable 6 Foot, High Speed Data Sync Cord, Black", 9.49, ["high speed", "6 foot", "black"]),
    item("B07THHQMHM", "Short USB Charging Cable 1 Foot, Red, 2-Pack", 6.99, ["1 foot", "red"]),
    item("B09NQTRGTC", "Premium Gold Plated High Speed USB Cable 3 Foot Red Edition", 45.00, ["high speed", "3 foot", "red"]),
    # pillow covers
    item("B08R6QYYW2", "Gingko Light Hand Painted Pillow Cover 20\"x20\", Linen Throw Pillow Case", 24.50, ["gingko light", "20\"x20\"", "hand painted"]),
    item("B08R6PZ2KD", "Gingko Leaf Printed Pillow Cover 18\"x18\", Cotton", 14.99, ["18\"x18\"", "printed"]),
    item("B07ZPQW3MM", "Hand Painted Floral Pillow Cover 20\"x20\", Velvet", 29.99, ["20\"x20\"", "hand painted"]),
    item("B0B1GQ8ZTK", "Designer Gingko Light Silk Pillow Cover 20\"x20\", Hand Painted Original", 120.00, ["gingko light", "20\"x20\"", "hand painted"]),
    # hair extensions
    item("B09KZ4D1HF", "Long Clip-in Hair Extension, Natural Looking Straight Synthetic Hairpiece 24 Inch", 19.99, ["long", "clip-in", "natural looking"]),
    item("B09KZ5N2QP", "Short Clip-in Bangs Hair Extension, Natural Looking", 12.99, ["short", "clip-in", "natural looking"]),
    item("B07W6J3YVC", "Long Curly Wig for Women, Heat Resistant Fiber", 27.49, ["long", "curly"]),
    item("B0C3T5M8RX", "Long Clip-in Human Hair Extension, Natural Looking, 100% Remy", 89.00, ["long", "clip-in", "natural looking"]),
    # ottoman benches
    item("B07KXQ9N4L", "Space-Saving Storage Ottoman Bench 100x45x45cm, Blue Velvet for Living Room", 189.00, ["space-saving", "blue living room", "100x45x45cm"]),
    item("B07KXR2P7D", "Storage Ottoman Bench 80x40x40cm, Grey Linen", 129.00, ["80x40x40cm", "grey"]),
    item("B08F5T7ZQB", "Folding Ottoman Bench, Space-Saving, Beige", 79.99, ["space-saving", "beige"]),
    item("B09J1W6Y4C", "Tufted Ottoman Bench 100x45x45cm, Navy Blue Leather, Space-Saving", 480.00, ["space-saving", "blue living room", "100x45x45cm"]),
    # car subwoofers
    item("B00BWJ1Z0S", "12 Inch Car Subwoofer, Dual Voice Coil, 1200 Watt Peak", 89.95, ["12 inch", "dual voice coil", "car subwoofer"]),
    item("B00BWJ2K7A", "10 Inch Car Subwoofer, Single Voice Coil", 59.95, ["10 inch", "car subwoofer"]),
    item("B01N7SOEJC", "12 Inch Powered Subwoofer Enclosure for Home Theater", 149.00, ["12 inch", "home theater"]),
    item("B07D1Q8XLR", "Competition 12 Inch Car Subwoofer, Dual Voice Coil, 3000 Watt", 259.00, ["12 inch", "dual voice coil", "car subwoofer"]),
    # green tea
    item("B000GG0BNE", "Organic Green Tea Bags, Japanese Sencha, Caffeinated", 11.49, ["organic", "green tea", "100 count"], {"size": ["20 count", "100 count"]}),
    item("B000GG5IXA", "Green Tea Bags with Jasmine, 20 Count", 4.99, ["green tea", "20 count"]),
    item("B00FB2H4G8", "Organic Black Tea Bags, English Breakfast, 100 Count", 12.99, ["organic", "black tea", "100 count"]),
    item("B0009F3QKU", "Ceremonial Grade Organic Green Tea, 100 Count Sachets, Gift Tin", 34.00, ["organic", "green tea", "100 count"]),
    # running shoes
    item("B07PJV3ZLK", "Men's Lightweight Running Shoes, Breathable Mesh Athletic Sneakers", 54.99, ["lightweight", "breathable mesh", "running shoes"], {"size": ["8", "9", "10", "11"], "color": ["black", "blue"]}),
    item("B07PJVQ9WM", "Men's Trail Running Shoes, Waterproof", 69.99, ["running shoes", "waterproof"], {"size": ["9", "10", "11"]}),
    item("B08CZ3NNHT", "Lightweight Walking Shoes, Breathable Mesh, Slip-On", 39.99, ["lightweight", "breathable mesh", "walking shoes"]),
    item("B09T3KQW8V", "Carbon Plate Racing Running Shoes, Lightweight Breathable Mesh Upper", 160.00, ["lightweight", "breathable mesh", "running shoes"]),
    # phone cases
    item("B09G9FPHY6", "Shockproof Clear Phone Case for iPhone 13 with Kickstand", 12.99, ["shockproof", "clear", "kickstand"]),
    item("B09G9HD6PD", "Slim Clear Phone Case for iPhone 13, Thin TPU", 7.99, ["clear", "slim"]),
    item("B09JNQ4WZX", "Rugged Shockproof Phone Case for iPhone 13, Black", 15.99, ["shockproof", "black"]),
    item("B0BDJ7TQ6M", "Luxury Shockproof Clear Case for iPhone 13 with Metal Kickstand", 39.99, ["shockproof", "clear", "kickstand"]),
]

TASKS = [
    {"instruction": "i want a noise cancelling cosycost usb microphone, and price lower than 70.00 dollars", "required_attributes": ["noise cancelling", "cosycost", "usb microphone"], "max_price": 70.0, "required_options": {}, "target_ids": ["B0972Q1T8T"], "query": "noise cancelling cosycost usb microphone"},
    {"instruction": "i would like a 3 ounce bottle of bright citrus deodorant for sensitive skin, and price lower than 50.00 dollars", "required_attributes": ["3 ounce bottle", "bright citrus", "sensitive skin"], "max_price": 50.0, "required_options": {"scent": "bright citrus", "size": "3 ounce (pack of 1)"}, "target_ids": ["B078GWRC1J"], "query": "3 ounce bright citrus deodorant sensitive skin"},
    {"instruction": "i need a high speed 3 foot red usb cable, and price lower than 40.00 dollars", "required_attributes": ["high speed", "3 foot", "red"], "max_price": 40.0, "required_options": {"color": "red"}, "target_ids": ["B01GGKYKQM"], "query": "high speed 3 foot red usb cable"},
    {"instruction": "i want a gingko light and 20\"x20\" pillow cover that is hand painted, and price lower than 50.00 dollars", "required_attributes": ["gingko light", "20\"x20\"", "hand painted"], "max_price": 50.0, "required_options": {}, "target_ids": ["B08R6QYYW2"], "query": "gingko light 20x20 hand painted pillow cover"},
    {"instruction": "long clip-in hair extension which is natural looking, and price lower than 40.00 dollars", "required_attributes": ["long", "clip-in", "natural looking"], "max_price": 40.0, "required_options": {}, "target_ids": ["B09KZ4D1HF"], "query": "long clip-in hair extension natural looking"},
    {"instruction": "space-saving ottoman bench to match my blue living room, pick that one that's 100x45x45cm, and price lower than 430.00 dollars", "required_attributes": ["space-saving", "blue living room", "100x45x45cm"], "max_price": 430.0, "required_options": {}, "target_ids": ["B07KXQ9N4L"], "query": "space-saving ottoman bench blue 100x45x45cm"},
    {"instruction": "i need a 12 inch dual voice coil car subwoofer, and price lower than 200.00 dollars", "required_attributes": ["12 inch", "dual voice coil", "car subwoofer"], "max_price": 200.0, "required_options": {}, "target_ids": ["B00BWJ1Z0S"], "query": "12 inch dual voice coil car subwoofer"},
    {"instruction": "i want organic green tea bags, 100 count, and price lower than 20.00 dollars", "required_attributes": ["organic", "green tea", "100 count"], "max_price": 20.0, "required_options": {"size": "100 count"}, "target_ids": ["B000GG0BNE"], "query": "organic green tea bags 100 count"},
    {"instruction": "men's lightweight running shoes with breathable mesh in size 10, and price lower than 80.00 dollars", "required_attributes": ["lightweight", "breathable mesh", "running shoes"], "max_price": 80.0, "required_options": {"size": "10"}, "target_ids": ["B07PJV3ZLK"], "query": "lightweight running shoes breathable mesh"},
    {"instruction": "a shockproof clear phone case for iphone 13 with a kickstand, and price lower than 25.00 dollars", "required_attributes": ["shockproof", "clear", "kickstand"], "max_price": 25.0, "required_options": {}, "target_ids": ["B09G9FPHY6"], "query": "shockproof clear phone case iphone 13 kickstand"},
]


def tokens(text):
    return {t for t in re.split(r"[^0-9a-z]+", text.lower()) if t}


def rank(query):
    q = tokens(query)
    scored = []
    for it in CATALOG:
        t = tokens(it["title"])
        for a in it["attributes"]:
            t |= tokens(a)
        s = len(q & t)
        if s > 0:
            scored.append((-s, it["id"], it))
    scored.sort(key=lambda x: (x[0], x[1]))
    return [x[2] for x in scored]


def reward(task, it, selected):
    attrs = {a.lower() for a in it["attributes"]}
    n = sum(1 for a in task["required_attributes"] if a.lower() in attrs)
    n += 1 if it["price"] <= task["max_price"] else 0
    n += sum(1 for k, v in task["required_options"].items() if selected.get(k, "").lower() == v.lower())
    return n / (len(task["required_attributes"]) + 1 + len(task["required_options"]))


def py(s):
    """A Python string literal the way the playbook author writes it."""
    if '"' in s and "'" not in s:
        return "'" + s + "'"
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def description_of(task):
    return task["instruction"].removeprefix("i want a ").removeprefix("i would like a ").removeprefix("i need a ").removeprefix("i want ").removeprefix("a ")


def fmt_price(p):
    return f"{p:.2f}"


def webshop_playbook(task, drop_check=False, buggy=False):
    desc = description_of(task)
    attrs = task["required_attributes"]
    page1 = rank(task["query"])[:PAGE]
    valid = [it for it in page1 if it["price"] < task["max_price"]]
    counts = [sum(1 for a in attrs if a.lower() in {x.lower() for x in it["attributes"]}) for it in valid]
    best = valid[counts.index(max(counts))]
    selected = dict(task["required_options"])
    assert best["id"] in task["target_ids"], (task["instruction"], best["id"])
    assert reward(task, best, selected) == 1.0
    assert all(v in best["options"][k] for k, v in selected.items())

    attr_list = "[" + ", ".join(py(a) for a in attrs) + "]"
    main = []
    if buggy:
        # Unescaped quotes, as a demo with injected bugs would suggest.
        main.append('description = "' + desc + '" # copy the description')
        main.append('description = "' + desc.replace('"', '\\"') + '" # escape the quotes inside the string')
    else:
        main.append("description = " + py(desc))
    main += [
        "attributes = " + attr_list + " # save the list of desired attributes besides price, escape any quotes",
        "search_query = generate_query(description) # get a search statement to find the item",
        "act(f'search[{search_query}]')",
        "valid_ids = filter_ids_by_price(description)",
        "best_id = select_best_product(description, attributes, valid_ids)",
        "buy_best_product(best_id, attributes)",
    ]
    gq = [
        "description = get_args() # call this once to get the description of the target product",
        "print(description) # print out the description so that you know what it is",
        'query = """' + task["query"] + '"""',
        "answer(query) # answer the query to return it.",
    ]
    fp = [
        "description = get_args() # call this once to get the description of the target product",
        "print_page() # call this function to print out the list of products",
        "id_to_price = {} # record an id to price dictionary",
    ]
    if not buggy:
        fp.insert(1, "max_price = " + fmt_price(task["max_price"]) + " # store the max price from the description")
    for it in page1:
        fp.append(f"id_to_price['{it['id']}'] = {fmt_price(it['price'])} # item {it['id']} has a price of ${fmt_price(it['price'])}")
    fp.append("results = [id for id, price in id_to_price.items() if price < max_price]")
    if buggy:
        fp.append("max_price = " + fmt_price(task["max_price"]) + " # set the maximum price")
        fp.append("results = [id for id, price in id_to_price.items() if price < max_price]")
    fp.append("answer(results) # answer with the result of the ids that are below max_price")
    sbp = [
        "description, attributes, candidates = get_args() # get the target description and product candidates",
        "scores = {}",
        "for product_id in candidates:\n"
        "    act(f'click[{product_id}]') # go to the product's page details\n"
        "    scores[product_id] = check_requirements(description, attributes)\n"
        "    act(f'click[< Prev]') # always perform this step to get back to the list of results\n",
        "products_with_max_score = [product_id for product_id, estimated_score in scores.items() if estimated_score == max(scores.values())]",
        "answer(products_with_max_score[0]) # return the id of the first best candidate",
    ]
    cr = []
    if drop_check:
        cr.append("Your task is to: Given the target description and a list of requirements, check how many requirements the current product page meets and answer that number with `answer(INTEGER)`.")
    for n in counts:
        cr += [
            "target_description, requirements = get_args() # get the requirements and product_info",
            "print(requirements) # print out the requirements",
            "print_page() # print the product page so we can check the requirements",
            f"answer({n}) # the number of requirements the product meets",
        ]
    bbp = [
        "product_asin, attributes = get_args()",
        "act(f'click[{product_asin}]')",
        "select_options(attributes) # select the item options based on the attributes before buying",
        "act('click[Buy Now]') # Buy the item to complete the task.",
    ]
    so = [
        "attributes = get_args()",
        "get_page_options() # return the list of page options (if any)",
    ]
    for k, v in selected.items():
        so.append(f"act('click[{v}]') # select the {k} option that matches the request")
    so.append("answer('success.')")
    if best["options"]:
        opts = "{" + ", ".join(f"'{k}': [" + ", ".join(f"'{v}'" for v in vals) + "]" for k, vals in best["options"].items()) + "}"
        gpo = [
            "print_page() # print out the current observation to see if there are any buying variations to select before buying.",
            "variations = " + opts,
            "answer(variations)",
        ]
    else:
        gpo = [
            "print_page() # print out the current observation to see if there are any buying variations to select before buying.",
            "variations = [] # save variations (if any) in a list",
            'answer("no options found.")',
        ]
    book = {
        "_main": main,
        "generate_query": gq,
        "filter_ids_by_price": fp,
        "select_best_product": sbp,
        "check_requirements": cr,
        "buy_best_product": bbp,
        "select_options": so,
        "get_page_options": gpo,
    }
    return {k: [{"completion": c} for c in v] for k, v in book.items()}


def nosubtask_playbook(task):
    page1 = rank(task["query"])[:PAGE]
    target = task["target_ids"][0]
    assert target in [it["id"] for it in page1]
    main = [
        "description = " + py(description_of(task)),
        "act('search[" + task["query"] + "]')",
        "print_page() # look at the results to pick the item that matches the description",
        f"act('click[{target}]')",
    ]
    for k, v in task["required_options"].items():
        main.append(f"act('click[{v}]') # select the {k} option")
    main.append("act('click[Buy Now]')")
    return {"_main": [{"completion": c} for c in main]}


def dump(path, data):
    full = os.path.join(ROOT, path)
    os.makedirs(os.path.dirname(full), exist_ok=True)
    with open(full, "w") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")


def main():
    ids = [it["id"] for it in CATALOG]
    assert len(ids) == 40 and len(set(ids)) == 40
    dump("shop/catalog.json", CATALOG)
    dump("shop/tasks.json", [{k: v for k, v in t.items() if k != "query"} for t in TASKS])
    for i, task in enumerate(TASKS):
        dump(f"playbooks/webshop/task-{i}.json", webshop_playbook(task))
        dump(f"playbooks/nosubtask/task-{i}.json", nosubtask_playbook(task))
    dump("playbooks/ablation/drop-check_requirements.json", webshop_playbook(TASKS[0], drop_check=True))
    dump("playbooks/ablation/buggy-demo-task-3.json", webshop_playbook(TASKS[3], buggy=True))
    # Expected outcomes, for tests.
    expected = []
    for task in TASKS:
        page1 = rank(task["query"])[:PAGE]
        expected.append({"query": task["query"], "page1": [it["id"] for it in page1], "total": len(rank(task["query"]))})
    dump("shop/expected_search.json", expected)


if __name__ == "__main__":
    main()
