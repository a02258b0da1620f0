#include "gcx/matching.hpp"

#include <algorithm>

#include "gcx/error.hpp"

namespace gcx {

std::string_view to_string(TimeInForce tif) {
  return tif == TimeInForce::resting ? "resting" : "immediate_or_cancel";
}

TimeInForce parse_time_in_force(std::string_view text) {
  if (text == "resting" || text == "gtc") return TimeInForce::resting;
  if (text == "immediate_or_cancel" || text == "ioc") return TimeInForce::immediate_or_cancel;
  throw Error(ErrorCode::Parse, "unknown time in force '" + std::string(text) + "'");
}

void MatchingEngine::list_instrument(const InstrumentId& id, Decimal tick_size) {
  if (!tick_size.is_positive()) throw Error(ErrorCode::InvalidInstrument, "tick size must be positive for " + id);
  books_[id].tick = tick_size;
}

MatchingEngine::Book& MatchingEngine::book_for(const InstrumentId& id) {
  auto it = books_.find(id);
  if (it == books_.end()) throw Error(ErrorCode::UnknownInstrument, "no book for '" + id + "'");
  return it->second;
}

const MatchingEngine::Book& MatchingEngine::book_for(const InstrumentId& id) const {
  auto it = books_.find(id);
  if (it == books_.end()) throw Error(ErrorCode::UnknownInstrument, "no book for '" + id + "'");
  return it->second;
}

void MatchingEngine::validate(const OrderRequest& request, const Book& book) const {
  if (request.quantity <= 0) throw Error(ErrorCode::InvalidArgument, "order quantity must be > 0");
  if (request.price) {
    if (!request.price->is_positive()) throw Error(ErrorCode::BadTick, "limit price must be positive");
    if (!request.price->is_multiple_of(book.tick))
      throw Error(ErrorCode::BadTick,
                  "price " + request.price->str() + " is not a multiple of tick " + book.tick.str());
  }
}

namespace {

bool crosses(Side taker, const std::optional<Decimal>& limit, Decimal level_price) {
  if (!limit) return true;
  return taker == Side::buy ? level_price <= *limit : level_price >= *limit;
}

}  // namespace

SubmitResult MatchingEngine::submit(const OrderRequest& request, SimTime now) {
  Book& book = book_for(request.instrument_id);
  validate(request, book);

  Order taker;
  taker.order_id = next_id_++;
  taker.sequence = taker.order_id;
  taker.account_id = request.account_id;
  taker.instrument_id = request.instrument_id;
  taker.side = request.side;
  taker.price = request.price;
  taker.quantity = request.quantity;
  taker.time_in_force = request.price ? request.time_in_force : TimeInForce::immediate_or_cancel;
  taker.timestamp = now;

  SubmitResult result;
  result.order_id = taker.order_id;

  auto& opposite_side = request.side == Side::buy ? book.asks : book.bids;
  while (taker.quantity > 0 && !opposite_side.empty()) {
    auto level_it = request.side == Side::buy ? opposite_side.begin() : std::prev(opposite_side.end());
    if (!crosses(request.side, request.price, level_it->first)) break;
    Level& level = level_it->second;
    while (taker.quantity > 0 && !level.empty()) {
      Order& maker = level.front();
      const std::int64_t qty = std::min(taker.quantity, maker.quantity);
      Trade trade;
      trade.trade_id = next_trade_id_++;
      trade.instrument_id = request.instrument_id;
      trade.maker_order_id = maker.order_id;
      trade.taker_order_id = taker.order_id;
      trade.maker_account = maker.account_id;
      trade.taker_account = taker.account_id;
      trade.taker_side = taker.side;
      trade.price = level_it->first;
      trade.quantity = qty;
      trade.timestamp = now;
      trade.self_trade = maker.account_id == taker.account_id;
      result.trades.push_back(trade);
      taker.quantity -= qty;
      maker.quantity -= qty;
      result.filled += qty;
      if (maker.quantity == 0) {
        resting_.erase(maker.order_id);
        level.pop_front();
      }
    }
    if (level.empty()) opposite_side.erase(level_it);
  }

  if (taker.quantity > 0) {
    if (taker.time_in_force == TimeInForce::resting) {
      auto& own_side = request.side == Side::buy ? book.bids : book.asks;
      Level& level = own_side[*taker.price];
      level.push_back(taker);
      resting_.emplace(taker.order_id, Locator{taker.instrument_id, taker.side, *taker.price, std::prev(level.end())});
      result.resting = taker.quantity;
    } else {
      result.cancelled = taker.quantity;
    }
  }
  return result;
}

std::vector<PreviewFill> MatchingEngine::preview(const OrderRequest& request) const {
  const Book& book = book_for(request.instrument_id);
  validate(request, book);
  std::vector<PreviewFill> fills;
  std::int64_t remaining = request.quantity;
  const auto& opposite_side = request.side == Side::buy ? book.asks : book.bids;
  auto visit = [&](const auto& price, const Level& level) {
    if (!crosses(request.side, request.price, price)) return false;
    std::int64_t available = 0;
    for (const auto& o : level) available += o.quantity;
    const std::int64_t qty = std::min(available, remaining);
    fills.push_back({price, qty});
    remaining -= qty;
    return remaining > 0;
  };
  if (request.side == Side::buy) {
    for (auto it = opposite_side.begin(); it != opposite_side.end(); ++it)
      if (!visit(it->first, it->second)) break;
  } else {
    for (auto it = opposite_side.rbegin(); it != opposite_side.rend(); ++it)
      if (!visit(it->first, it->second)) break;
  }
  return fills;
}

std::int64_t MatchingEngine::cancel(OrderId order_id) {
  if (order_id == 0 || order_id >= next_id_) throw Error(ErrorCode::UnknownOrder, "order " + std::to_string(order_id) + " was never issued");
  auto it = resting_.find(order_id);
  if (it == resting_.end()) return 0;
  const Locator loc = it->second;
  Book& book = book_for(loc.instrument);
  auto& side = loc.side == Side::buy ? book.bids : book.asks;
  auto level_it = side.find(loc.price);
  const std::int64_t qty = loc.it->quantity;
  level_it->second.erase(loc.it);
  if (level_it->second.empty()) side.erase(level_it);
  resting_.erase(it);
  return qty;
}

TopOfBook MatchingEngine::best_bid_ask(const InstrumentId& instrument) const {
  const Book& book = book_for(instrument);
  TopOfBook top;
  auto level_total = [](const Level& level) {
    std::int64_t q = 0;
    for (const auto& o : level) q += o.quantity;
    return q;
  };
  if (!book.bids.empty()) {
    const auto& [price, level] = *book.bids.rbegin();
    top.bid = BookLevel{price, level_total(level)};
  }
  if (!book.asks.empty()) {
    const auto& [price, level] = *book.asks.begin();
    top.ask = BookLevel{price, level_total(level)};
  }
  return top;
}

std::vector<Order> MatchingEngine::open_orders(const AccountId& account) const {
  std::vector<Order> out;
  for (const auto& [id, book] : books_) {
    for (const auto* side : {&book.bids, &book.asks})
      for (const auto& [price, level] : *side)
        for (const auto& o : level)
          if (o.account_id == account) out.push_back(o);
  }
  std::sort(out.begin(), out.end(), [](const Order& a, const Order& b) { return a.sequence < b.sequence; });
  return out;
}

std::vector<Order> MatchingEngine::open_orders_for_instrument(const InstrumentId& instrument) const {
  const Book& book = book_for(instrument);
  std::vector<Order> out;
  for (const auto* side : {&book.bids, &book.asks})
    for (const auto& [price, level] : *side)
      for (const auto& o : level) out.push_back(o);
  std::sort(out.begin(), out.end(), [](const Order& a, const Order& b) { return a.sequence < b.sequence; });
  return out;
}

std::vector<OrderId> MatchingEngine::cancel_all(const InstrumentId& instrument) {
  std::vector<OrderId> ids;
  for (const auto& o : open_orders_for_instrument(instrument)) ids.push_back(o.order_id);
  for (auto id : ids) cancel(id);
  return ids;
}

std::vector<BookLevel> MatchingEngine::depth(const InstrumentId& instrument, Side side) const {
  const Book& book = book_for(instrument);
  std::vector<BookLevel> out;
  auto push = [&](const Decimal& price, const Level& level) {
    std::int64_t q = 0;
    for (const auto& o : level) q += o.quantity;
    out.push_back({price, q});
  };
  if (side == Side::buy) {
    for (auto it = book.bids.rbegin(); it != book.bids.rend(); ++it) push(it->first, it->second);
  } else {
    for (const auto& [price, level] : book.asks) push(price, level);
  }
  return out;
}

}  // namespace gcx
